#include "ivselect/partition.hpp"

#include <algorithm>
#include <string>

#include "ivselect/errors.hpp"

namespace ivselect {
namespace {

scores::InstrumentBinning bins_for(const Dataset& data, std::size_t j, const BinningOptions& options) {
    const auto col = data.q.col(static_cast<Eigen::Index>(j));
    const std::span<const double> z(col.data(), static_cast<std::size_t>(col.size()));
    if (const auto it = options.overrides.find(j); it != options.overrides.end()) {
        return scores::make_bins_as(it->second, z, options.bins, options.rare_threshold);
    }
    return scores::make_bins(z, options.bins, options.rare_threshold);
}

std::vector<std::size_t> complement_of(const std::vector<std::size_t>& js, std::size_t p) {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < p; ++k) {
        if (std::find(js.begin(), js.end(), k) == js.end()) out.push_back(k);
    }
    return out;
}

// Cell code of row i: mixed-radix number over the component bins, where a
// binary component contributes 0/1 and an L-bin component 0..L-1.
double cell_code(const Dataset& data, const Partition& part, Eigen::Index i) {
    double code = 0.0;
    for (std::size_t c = 0; c < part.instruments.size(); ++c) {
        const auto& b = part.component_binnings[c];
        const int bin = b.bin_of(data.q(i, static_cast<Eigen::Index>(part.instruments[c])));
        const std::size_t radix = b.kind == scores::BinKind::binary ? 2 : b.size();
        const std::size_t digit = b.kind == scores::BinKind::binary ? (bin == 0 ? 1 : 0) : static_cast<std::size_t>(bin);
        code = code * static_cast<double>(radix) + static_cast<double>(digit);
    }
    return code;
}

}  // namespace

Partition make_partition(const Dataset& data, std::size_t j, const BinningOptions& options) {
    if (j >= data.p()) throw InputError("partition: candidate index " + std::to_string(j) + " out of range");
    Partition part;
    part.instruments = {j};
    part.covariates = complement_of(part.instruments, data.p());
    part.binning = bins_for(data, j, options);
    return part;
}

Partition make_pooled_partition(const Dataset& data, const std::vector<std::size_t>& js,
                                const BinningOptions& options) {
    if (js.empty()) throw InputError("partition: no instruments to pool");
    if (js.size() == 1) return make_partition(data, js.front(), options);
    Partition part;
    part.instruments = js;
    std::sort(part.instruments.begin(), part.instruments.end());
    part.covariates = complement_of(part.instruments, data.p());
    for (std::size_t j : part.instruments) part.component_binnings.push_back(bins_for(data, j, options));
    const Eigen::VectorXd codes = instrument_values(data, part);
    const std::span<const double> z(codes.data(), static_cast<std::size_t>(codes.size()));
    // Cells are categorical; small cells are merged by the discrete rule.
    part.binning = scores::make_bins_as(scores::BinKind::discrete, z, options.bins, options.rare_threshold);
    if (part.binning.size() < 2) {
        throw DegenerateInstrumentError("partition: pooled instrument has a single populated cell");
    }
    return part;
}

Eigen::VectorXd instrument_values(const Dataset& data, const Partition& partition) {
    if (!partition.pooled()) return data.q.col(static_cast<Eigen::Index>(partition.instrument()));
    Eigen::VectorXd codes(data.q.rows());
    for (Eigen::Index i = 0; i < data.q.rows(); ++i) codes[i] = cell_code(data, partition, i);
    return codes;
}

std::vector<int> instrument_bins(const Dataset& data, const Partition& partition) {
    const Eigen::VectorXd z = instrument_values(data, partition);
    std::vector<int> bins(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) bins[static_cast<std::size_t>(i)] = partition.binning.bin_of(z[i]);
    return bins;
}

void validate_partition(const Partition& partition, std::size_t p) {
    if (partition.instruments.empty()) throw InputError("partition: no instrument");
    std::vector<int> seen(p, 0);
    for (std::size_t j : partition.instruments) {
        if (j >= p) throw InputError("partition: instrument index out of range");
        ++seen[j];
    }
    for (std::size_t j : partition.covariates) {
        if (j >= p) throw InputError("partition: covariate index out of range");
        ++seen[j];
    }
    for (std::size_t j = 0; j < p; ++j) {
        if (seen[j] != 1) {
            throw InputError("partition: candidate " + std::to_string(j) +
                             " must appear exactly once among instruments and covariates");
        }
    }
    if (partition.binning.size() == 0) throw InputError("partition: empty binning");
}

}  // namespace ivselect
