#include <iostream>

#include <CLI11.hpp>

#include "fixturegen.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Regenerate replay fixtures from the synthetic data sets", "curate-fixturegen"};
    std::string data = "data", playbook = "CONSTITUTION.md", out = "fixtures";
    app.add_option("--data", data, "Directory of task data sets")->capture_default_str();
    app.add_option("--playbook", playbook, "Playbook sent with bootstrap prompts")->capture_default_str();
    app.add_option("--out", out, "Fixture root; each data set gets a subdirectory")->capture_default_str();
    CLI11_PARSE(app, argc, argv);
    try {
        for (const auto& name : curate::fixturegen::generate_all(data, playbook, out)) {
            std::cout << "wrote " << out << "/" << name << "\n";
        }
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
