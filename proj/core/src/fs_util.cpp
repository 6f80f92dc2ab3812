#include "curate/fs_util.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace curate {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    static std::atomic<unsigned long> counter{0};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(tid % 100000) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string encode_file_stem(std::string_view id) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
        const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                           (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (plain) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    if (out.empty()) out = "%";
    return out;
}

std::string decode_file_stem(std::string_view stem) {
    if (stem == "%") return {};
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    std::string out;
    for (std::size_t i = 0; i < stem.size(); ++i) {
        if (stem[i] == '%' && i + 2 < stem.size()) {
            const int hi = nibble(stem[i + 1]);
            const int lo = nibble(stem[i + 2]);
            if (hi < 0 || lo < 0) throw IoError("bad file stem: " + std::string(stem));
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 2;
        } else if (stem[i] == '%') {
            throw IoError("bad file stem: " + std::string(stem));
        } else {
            out.push_back(stem[i]);
        }
    }
    return out;
}

}  // namespace curate
