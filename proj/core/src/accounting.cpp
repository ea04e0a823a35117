#include "step/accounting.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace step {

template <std::floating_point T>
ParamCensus count_params(const ModelGraph<T>& model) {
    ParamCensus c;
    model.for_each_param([&](const std::string&, const Parameter<T>& p) {
        (p.trainable ? c.trainable : c.frozen_float) += static_cast<std::int64_t>(p.size());
    });
    for (const auto* bank : model.frozen_banks()) {
        const auto n = static_cast<std::int64_t>(bank->values().size());
        if (bank->family() == Family::RandomBinary) {
            c.binary += n;
        } else {
            c.ternary += n;
        }
    }
    return c;
}

template ParamCensus count_params(const ModelGraph<float>&);
template ParamCensus count_params(const ModelGraph<double>&);

namespace {

std::uint64_t group_bytes(std::int64_t count, int bits) {
    if (count < 0 || bits < 0) throw ContractError("memory estimate: negative count or width");
    const auto total_bits = static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(bits);
    return (total_bits + 7) / 8;
}

}  // namespace

std::uint64_t estimate_memory_bytes(const ParamCensus& census, const PrecisionMap& precision) {
    return group_bytes(census.trainable + census.frozen_float, precision.trainable_bits) +
           group_bytes(census.ternary, precision.ternary_bits) + group_bytes(census.binary, precision.binary_bits);
}

double round_decimals(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(value * scale) / scale;
}

AccountingReport make_report(std::string name, const ParamCensus& census, const PrecisionMap& precision) {
    AccountingReport r;
    r.name = std::move(name);
    r.census = census;
    r.memory_bytes = estimate_memory_bytes(census, precision);
    return r;
}

double reduction_percent(const AccountingReport& candidate, const AccountingReport& baseline) {
    if (baseline.memory_bytes == 0) throw ContractError("reduction_percent: baseline has zero memory");
    return 100.0 * (1.0 - static_cast<double>(candidate.memory_bytes) / static_cast<double>(baseline.memory_bytes));
}

double trainable_reduction_percent(const AccountingReport& candidate, const AccountingReport& baseline) {
    if (baseline.census.trainable == 0) throw ContractError("trainable_reduction_percent: baseline has none");
    return 100.0 * (1.0 - static_cast<double>(candidate.census.trainable) /
                              static_cast<double>(baseline.census.trainable));
}

void attach_baseline(AccountingReport& candidate, const AccountingReport& baseline) {
    candidate.reduction_pct = reduction_percent(candidate, baseline);
    candidate.trainable_reduction_pct = trainable_reduction_percent(candidate, baseline);
    candidate.baseline_name = baseline.name;
}

AccountingReport describe_step_det_budget() {
    ParamCensus c;
    c.trainable = 232'492;
    c.ternary = 3'738'560;
    return make_report("STeP-Det", c);
}

std::string reports_to_json(const std::vector<AccountingReport>& reports, int indent) {
    nlohmann::json out;
    out["schema"] = "step-accounting";
    out["version"] = 1;
    out["reports"] = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json j;
        j["name"] = r.name;
        j["trainable"] = r.census.trainable;
        j["non_trainable"] = r.census.non_trainable();
        j["ternary"] = r.census.ternary;
        j["binary"] = r.census.binary;
        j["memory_bytes"] = r.memory_bytes;
        j["memory_mb"] = r.memory_mb();
        if (r.reduction_pct) {
            j["baseline"] = r.baseline_name;
            j["reduction_pct"] = *r.reduction_pct;
        }
        if (r.trainable_reduction_pct) j["trainable_reduction_pct"] = *r.trainable_reduction_pct;
        out["reports"].push_back(std::move(j));
    }
    return out.dump(indent);
}

std::string reports_to_table(const std::vector<AccountingReport>& reports) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-20s %14s %16s %12s %14s %16s\n", "Model", "Trainable", "Non Trainable",
                  "Memory (MB)", "Reduction (%)", "Trainable Red.");
    out += line;
    for (const auto& r : reports) {
        char red[32] = "-";
        char tred[32] = "-";
        if (r.reduction_pct) std::snprintf(red, sizeof red, "%.1f", *r.reduction_pct);
        if (r.trainable_reduction_pct) std::snprintf(tred, sizeof tred, "%.1f", *r.trainable_reduction_pct);
        std::snprintf(line, sizeof line, "%-20s %14lld %16lld %12.1f %14s %16s\n", r.name.c_str(),
                      static_cast<long long>(r.census.trainable), static_cast<long long>(r.census.non_trainable()),
                      r.memory_mb(), red, tred);
        out += line;
    }
    return out;
}

}  // namespace step
