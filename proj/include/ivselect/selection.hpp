#pragma once

// Data-driven partition search: strong-instrument screening, candidate
// testing, final partition choice and the post-identification estimate.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ivselect/crossfit.hpp"
#include "ivselect/dataset.hpp"
#include "ivselect/errors.hpp"
#include "ivselect/partition.hpp"

namespace ivselect::selection {

enum class FinalMode { pmax, all };

std::string to_string(FinalMode m);
FinalMode final_mode_from_string(const std::string& s);

struct SelectionConfig {
    double alpha = 0.10;
    /// Unset means 0.1 / log(n).
    std::optional<double> fs_level;
    FinalMode mode = FinalMode::pmax;
    std::size_t min_cell = 10;
    BinningOptions binning;
    crossfit::CrossfitConfig crossfit;
    /// Replaces the lasso nuisance learner when set.
    crossfit::NuisanceProvider provider;
    std::size_t threads = 1;
    std::uint64_t seed = 0;
    bool estimate_effect = true;
    bool aipw = true;
};

struct Exclusion {
    std::size_t index = 0;
    std::string reason;
    bool operator==(const Exclusion&) const = default;
};

struct StrongSet {
    double fs_level = 0.0;
    double threshold = 0.0;
    std::vector<double> f;               // every candidate
    std::vector<std::size_t> members;    // ascending
    std::vector<Exclusion> excluded;     // above threshold, failed the support guard
    bool operator==(const StrongSet&) const = default;
};

struct CandidateTest {
    std::size_t index = 0;
    std::optional<crossfit::TestResult> result;
    std::string error;
    bool passed = false;
    bool operator==(const CandidateTest&) const = default;
};

enum class Verdict { rejected, identified };

std::string to_string(Verdict v);

struct FinalChoice {
    Verdict verdict = Verdict::rejected;
    /// "pmax", "single", "all"; empty when rejected.
    std::string rule;
    std::optional<Partition> partition;
    bool operator==(const FinalChoice&) const = default;
};

struct EffectEstimate {
    double ols = 0.0;
    double ols_se = 0.0;
    std::optional<double> aipw;
    std::optional<double> aipw_se;
    std::string aipw_error;
    bool operator==(const EffectEstimate&) const = default;
};

struct SelectionReport {
    double alpha = 0.10;
    double critical_value = 0.0;
    FinalMode mode = FinalMode::pmax;
    std::size_t n = 0;
    std::vector<std::string> candidate_names;
    StrongSet strong;
    std::vector<CandidateTest> tests;
    std::vector<std::size_t> pass_set;
    FinalChoice final;
    std::optional<EffectEstimate> effect;
    bool multiple_testing_corrected = false;

    const CandidateTest* test_for(std::size_t index) const;
    bool operator==(const SelectionReport&) const = default;
};

/// Error from one pipeline stage, labelled with the stage name.
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

double default_fs_level(std::size_t n);

/// Candidates with first-stage F at least the chi-square(1) critical value
/// at `fs_level`, minus those lacking `min_cell` rows in some instrument bin
/// and treatment arm.
StrongSet select_strong(const Dataset& data, double fs_level, std::size_t min_cell = 10,
                        const BinningOptions& binning = {});

/// Cross-fitted test of every member of `strong`. Candidate j uses the seed
/// stream (seed, j), so its result does not depend on the other members.
std::vector<CandidateTest> test_all_candidates(const Dataset& data, const std::vector<std::size_t>& strong,
                                               const SelectionConfig& config);

bool passes(const crossfit::TestResult& r, double alpha);

FinalChoice choose_final(const Dataset& data, const std::vector<CandidateTest>& tests, const StrongSet& strong,
                         FinalMode mode, double alpha, const BinningOptions& binning = {});

/// OLS coefficient of the treatment controlling for the partition's
/// covariates, plus a cross-fitted AIPW estimate when `aipw` is set.
EffectEstimate estimate_effect(const Dataset& data, const Partition& partition, bool aipw = true,
                               std::uint64_t seed = 0, const crossfit::LearnerConfig& learner = {});

SelectionReport run_pipeline(const Dataset& data, const SelectionConfig& config);

}  // namespace ivselect::selection
