#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "ivselect/dataset.hpp"
#include "ivselect/scores.hpp"

namespace ivselect {

struct BinningOptions {
    std::size_t bins = 4;
    double rare_threshold = scores::kDefaultRareBin;
    /// Per-candidate forced bin kind, keyed by candidate index.
    std::map<std::size_t, scores::BinKind> overrides;
};

/// Split of the candidates into instrument(s) and covariates.
///
/// A single-instrument partition bins that candidate directly. A pooled
/// partition (several instruments) bins the cross-classification of the
/// component bins, with `component_binnings` holding the per-candidate bins.
struct Partition {
    std::vector<std::size_t> instruments;
    std::vector<std::size_t> covariates;
    scores::InstrumentBinning binning;
    std::vector<scores::InstrumentBinning> component_binnings;

    std::size_t instrument() const { return instruments.front(); }
    bool pooled() const { return instruments.size() > 1; }
    bool operator==(const Partition&) const = default;
};

/// Candidate j as instrument, all other candidates as covariates.
Partition make_partition(const Dataset& data, std::size_t j, const BinningOptions& options = {});

/// Instruments `js` pooled into one cross-classified instrument.
Partition make_pooled_partition(const Dataset& data, const std::vector<std::size_t>& js,
                                const BinningOptions& options = {});

/// Instrument value per row (the cell code for pooled partitions).
Eigen::VectorXd instrument_values(const Dataset& data, const Partition& partition);

/// Bin index per row; -1 marks rows outside the single binary bin.
std::vector<int> instrument_bins(const Dataset& data, const Partition& partition);

/// Throws InputError when the fields do not describe a partition of 0..p-1.
void validate_partition(const Partition& partition, std::size_t p);

}  // namespace ivselect
