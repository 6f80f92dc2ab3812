#include "curate/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "curate/csv.hpp"

namespace curate {

namespace {

using Kind = EvalErrorKind;

// Binomial(n, p) tail probabilities, summed in log space.
class BinomialTails {
public:
    explicit BinomialTails(std::size_t n) : n_(n), log_choose_(n + 1), terms_(n + 1) {
        const double lg_n = std::lgamma(static_cast<double>(n) + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            log_choose_[i] = lg_n - std::lgamma(static_cast<double>(i) + 1) - std::lgamma(static_cast<double>(n - i) + 1);
        }
    }

    /// P[X >= k] when upper is true, else P[X <= k]; requires 0 < p < 1.
    double operator()(std::size_t k, double p, bool upper) {
        const double log_p = std::log(p);
        const double log_q = std::log1p(-p);
        const std::size_t first = upper ? k : 0;
        const std::size_t last = upper ? n_ : k;
        double max_term = -std::numeric_limits<double>::infinity();
        for (std::size_t i = first; i <= last; ++i) {
            const auto di = static_cast<double>(i);
            terms_[i] = log_choose_[i] + di * log_p + (static_cast<double>(n_) - di) * log_q;
            max_term = std::max(max_term, terms_[i]);
        }
        if (!std::isfinite(max_term)) return 0.0;
        double sum = 0.0;
        for (std::size_t i = first; i <= last; ++i) sum += std::exp(terms_[i] - max_term);
        return std::exp(max_term + std::log(sum));
    }

private:
    std::size_t n_;
    std::vector<double> log_choose_;
    std::vector<double> terms_;
};

// Root of an increasing function on [lo, hi].
template <class F>
double bisect_increasing(F f, double lo, double hi) {
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::string normalize_text(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string MatchRule::canonical(std::string_view text) const {
    std::string norm = normalize_text(text);
    auto it = aliases.find(norm);
    return it == aliases.end() ? norm : it->second;
}

MatchRule load_alias_table(std::string_view csv_text) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(csv_text);
    } catch (const csv::ParseError& e) {
        throw EvalError(Kind::InvalidArgs, "aliases", std::string("alias table: ") + e.what());
    }
    if (rows.empty() || rows.front() != csv::Row{"variant", "canonical"}) {
        throw EvalError(Kind::InvalidArgs, "aliases", "alias table header must be variant,canonical");
    }
    MatchRule rule;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 1 && rows[i].front().empty()) continue;
        if (rows[i].size() != 2) throw EvalError(Kind::InvalidArgs, "aliases", "alias record " + std::to_string(i) + " needs 2 fields");
        rule.aliases[normalize_text(rows[i][0])] = normalize_text(rows[i][1]);
    }
    return rule;
}

bool match_value(ValueKind kind, const Value& predicted, const Value& truth, const MatchRule& rule) {
    if (predicted.index() != truth.index()) return false;
    switch (kind) {
        case ValueKind::String:
            return rule.canonical(std::get<std::string>(predicted)) == rule.canonical(std::get<std::string>(truth));
        case ValueKind::Year: {
            const auto a = std::get<std::int64_t>(predicted);
            const auto b = std::get<std::int64_t>(truth);
            return (a > b ? a - b : b - a) <= rule.year_tolerance;
        }
        case ValueKind::Integer:
        case ValueKind::Date:
        case ValueKind::Boolean:
        case ValueKind::Enum:
            return predicted == truth;
    }
    return false;
}

GroundTruth parse_ground_truth(std::string_view csv_text, const TaskSpec& spec) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::parse(csv_text);
    } catch (const csv::ParseError& e) {
        throw EvalError(Kind::InvalidTruth, "", std::string("ground truth: ") + e.what());
    }
    if (rows.empty()) throw EvalError(Kind::InvalidTruth, "", "ground truth has no header");
    const auto& header = rows.front();
    auto column = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw EvalError(Kind::InvalidTruth, name, "ground truth lacks column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> key_idx;
    for (const auto& k : spec.entity_key_columns) key_idx.push_back(column(k));
    std::vector<std::size_t> attr_idx;
    for (const auto& a : spec.attributes) attr_idx.push_back(column(a.name));

    GroundTruth truth;
    for (const auto& a : spec.attributes) truth.attributes.push_back(a.name);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row.front().empty()) continue;
        if (row.size() != header.size()) {
            throw EvalError(Kind::InvalidTruth, "", "ground truth record " + std::to_string(r) + " has the wrong field count");
        }
        std::vector<std::string> key;
        for (auto i : key_idx) key.push_back(row[i]);
        const auto id = make_entity_id(key);
        std::vector<std::optional<Value>> values;
        for (std::size_t a = 0; a < spec.attributes.size(); ++a) {
            const auto& attr = spec.attributes[a];
            const auto& text = row[attr_idx[a]];
            if (text.empty()) {
                throw EvalError(Kind::MissingTruth, id, "ground truth for '" + id + "' has no value for " + attr.name);
            }
            if (text == kNotApplicable) {
                values.emplace_back(std::nullopt);
                continue;
            }
            Value v;
            if (auto err = value_from_text(attr.value_kind, attr.enum_choices, text, v)) {
                throw EvalError(Kind::InvalidTruth, id, "ground truth " + id + "/" + attr.name + ": " + *err);
            }
            values.emplace_back(std::move(v));
        }
        if (!truth.rows.emplace(id, std::move(values)).second) {
            throw EvalError(Kind::InvalidTruth, id, "duplicate ground-truth entity '" + id + "'");
        }
    }
    return truth;
}

std::vector<EvalCell> tally(const CuratedTable& curated, const GroundTruth& truth, const MatchRule& rule) {
    if (curated.rows.empty()) throw EvalError(Kind::EmptyTable, "", "curated table has no rows to evaluate");
    std::vector<EvalCell> cells;
    for (std::size_t a = 0; a < curated.attributes.size(); ++a) {
        const auto& attr = curated.attributes[a];
        auto t_idx = std::find(truth.attributes.begin(), truth.attributes.end(), attr.name);
        if (t_idx == truth.attributes.end()) {
            throw EvalError(Kind::MissingTruth, attr.name, "ground truth has no attribute '" + attr.name + "'");
        }
        const auto ti = static_cast<std::size_t>(t_idx - truth.attributes.begin());
        EvalCell cell;
        cell.attribute = attr.name;
        for (const auto& row : curated.rows) {
            auto it = truth.rows.find(row.entity_id);
            if (it == truth.rows.end()) {
                throw EvalError(Kind::MissingTruth, row.entity_id, "no ground truth for entity '" + row.entity_id + "'");
            }
            const auto& expected = it->second[ti];
            if (!expected) continue;
            ++cell.n_total;
            const auto& predicted = row.cells[a];
            if (predicted.status != CellStatus::Found || !predicted.value) continue;
            ++cell.n_found;
            if (match_value(attr.value_kind, *predicted.value, *expected, rule)) ++cell.k_correct;
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::string_view to_string(Regime regime) {
    return regime == Regime::IncludeNotFound ? "include_not_found" : "found_only";
}

double accuracy(const EvalCell& cell, Regime regime) {
    const auto denominator = regime == Regime::IncludeNotFound ? cell.n_total : cell.n_found;
    if (denominator == 0) {
        throw EvalError(Kind::EmptyDenominator, std::string(to_string(regime)),
                        "accuracy of '" + cell.attribute + "' undefined under " + std::string(to_string(regime)));
    }
    return static_cast<double>(cell.k_correct) / static_cast<double>(denominator);
}

Interval clopper_pearson(std::size_t k, std::size_t n, double alpha) {
    if (n == 0 || k > n || !(alpha > 0.0 && alpha < 1.0)) {
        throw EvalError(Kind::InvalidArgs, "", "clopper_pearson needs 0 <= k <= n, n >= 1, 0 < alpha < 1");
    }
    const double target = alpha / 2.0;
    const double phat = static_cast<double>(k) / static_cast<double>(n);
    BinomialTails tail(n);
    Interval ci;
    if (k > 0) {
        // P[X >= k] rises with p.
        ci.lo = bisect_increasing([&](double p) { return tail(k, p, true) - target; }, 0.0, phat);
    }
    if (k < n) {
        // P[X <= k] falls with p.
        ci.hi = bisect_increasing([&](double p) { return target - tail(k, p, false); }, phat, 1.0);
    }
    ci.lo = std::min(ci.lo, phat);
    ci.hi = std::max(ci.hi, phat);
    return ci;
}

const EvalEntry* EvalReport::find(std::string_view attribute, Regime regime) const {
    for (const auto& e : entries) {
        if (e.attribute == attribute && e.regime == regime) return &e;
    }
    return nullptr;
}

EvalReport evaluate(const CuratedTable& curated, const GroundTruth& truth, const MatchRule& rule, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw EvalError(Kind::InvalidArgs, "alpha", "alpha must lie in (0, 1)");
    EvalReport report;
    report.alpha = alpha;
    report.cells = tally(curated, truth, rule);
    for (const auto& cell : report.cells) {
        for (Regime regime : {Regime::IncludeNotFound, Regime::FoundOnly}) {
            EvalEntry e;
            e.attribute = cell.attribute;
            e.regime = regime;
            e.k = cell.k_correct;
            e.n = regime == Regime::IncludeNotFound ? cell.n_total : cell.n_found;
            if (e.n > 0) {
                e.accuracy = accuracy(cell, regime);
                e.ci = clopper_pearson(e.k, e.n, alpha);
            }
            report.entries.push_back(std::move(e));
        }
        if (cell.n_found == 0) {
            report.annotations.push_back(cell.attribute + ": no found entries; found-only accuracy undefined");
        }
    }
    return report;
}

std::string format_fraction(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    std::string s = buf;
    while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
    return s;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json regimes = nlohmann::json::object();
        for (Regime regime : {Regime::IncludeNotFound, Regime::FoundOnly}) {
            const auto* e = report.find(cell.attribute, regime);
            nlohmann::json j = {{"k", e->k}, {"n", e->n}};
            if (e->accuracy) {
                j["accuracy"] = *e->accuracy;
                j["ci_low"] = e->ci->lo;
                j["ci_high"] = e->ci->hi;
            } else {
                j["accuracy"] = "undefined";
            }
            regimes[std::string(to_string(regime))] = std::move(j);
        }
        attrs.push_back({
            {"attribute", cell.attribute},
            {"n_total", cell.n_total},
            {"n_found", cell.n_found},
            {"k_correct", cell.k_correct},
            {"regimes", std::move(regimes)},
        });
    }
    return {{"alpha", report.alpha}, {"attributes", std::move(attrs)}, {"annotations", report.annotations}};
}

std::string render_eval_report(const EvalReport& report) {
    std::size_t width = std::string_view("attribute").size();
    for (const auto& c : report.cells) width = std::max(width, c.attribute.size());
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    std::ostringstream out;
    char level[32];
    std::snprintf(level, sizeof level, "%.4g%% CI", (1.0 - report.alpha) * 100.0);
    out << pad("attribute", width + 2) << pad("regime", 20) << pad("k/n", 10) << pad("accuracy", 11) << level << "\n";
    for (const auto& e : report.entries) {
        out << pad(e.attribute, width + 2) << pad(std::string(to_string(e.regime)), 20)
            << pad(std::to_string(e.k) + "/" + std::to_string(e.n), 10);
        if (e.accuracy) {
            out << pad(format_fraction(*e.accuracy), 11) << "[" << format_fraction(e.ci->lo) << ", "
                << format_fraction(e.ci->hi) << "]";
        } else {
            out << "undefined";
        }
        out << "\n";
    }
    for (const auto& note : report.annotations) out << "note: " << note << "\n";
    return out.str();
}

}  // namespace curate
