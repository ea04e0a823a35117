#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "step/model.hpp"

namespace step {

/// Scalar parameter census. BN running statistics are buffers and appear in neither count.
struct ParamCensus {
    std::int64_t trainable = 0;
    std::int64_t ternary = 0;  // frozen CS-LBP / Haar weights
    std::int64_t binary = 0;   // frozen random {-1,+1} weights
    std::int64_t frozen_float = 0;  // full-precision parameters with trainable = false

    std::int64_t non_trainable() const noexcept { return ternary + binary + frozen_float; }
};

template <std::floating_point T>
ParamCensus count_params(const ModelGraph<T>& model);

/// Storage bits per scalar of each parameter group.
struct PrecisionMap {
    int trainable_bits = 32;
    int ternary_bits = 2;
    int binary_bits = 1;
};

/// sum over groups of ceil(count * bits / 8), in exact integer arithmetic.
std::uint64_t estimate_memory_bytes(const ParamCensus& census, const PrecisionMap& precision = {});

/// Decimal megabytes (1 MB = 10^6 bytes).
constexpr double to_decimal_mb(std::uint64_t bytes) noexcept { return static_cast<double>(bytes) / 1e6; }

/// Round half away from zero to a fixed number of decimals (display convention of the tables).
double round_decimals(double value, int decimals);

struct AccountingReport {
    std::string name;
    ParamCensus census;
    std::uint64_t memory_bytes = 0;
    std::optional<double> reduction_pct;  // memory reduction vs. `baseline_name`
    std::optional<double> trainable_reduction_pct;
    std::string baseline_name;

    std::int64_t trainable() const noexcept { return census.trainable; }
    std::int64_t non_trainable() const noexcept { return census.non_trainable(); }
    double memory_mb() const noexcept { return to_decimal_mb(memory_bytes); }
};

AccountingReport make_report(std::string name, const ParamCensus& census, const PrecisionMap& precision = {});

/// 100 * (1 - candidate.memory / baseline.memory). Throws ContractError on a zero baseline.
double reduction_percent(const AccountingReport& candidate, const AccountingReport& baseline);

/// 100 * (1 - candidate.trainable / baseline.trainable). Throws ContractError on a zero baseline.
double trainable_reduction_percent(const AccountingReport& candidate, const AccountingReport& baseline);

/// Fills both reduction fields of `candidate` against `baseline`.
void attach_baseline(AccountingReport& candidate, const AccountingReport& baseline);

/// Parameter budget of the STeP detection backbone: 232,492 trainable and
/// 3,738,560 frozen ternary weights (1.86 MB under the 2-bit rule).
AccountingReport describe_step_det_budget();

std::string reports_to_json(const std::vector<AccountingReport>& reports, int indent = 2);
/// Aligned text table: Model | Trainable | Non Trainable | Memory (MB) | Reduction (%).
std::string reports_to_table(const std::vector<AccountingReport>& reports);

}  // namespace step
