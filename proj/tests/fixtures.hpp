#pragma once

#include <vector>

#include "tti/features.hpp"
#include "tti/ingest.hpp"

namespace fixtures {

/// Canonical synthetic dataset (generated once, shared across tests).
inline const tti::ingest::SyntheticData& canonical() {
    static const tti::ingest::SyntheticData data =
        tti::ingest::synthesize_dataset({2010, 1, 1}, {2016, 6, 26}, 1);
    return data;
}

inline const std::vector<tti::ingest::JoinedRecord>& canonical_joined() {
    static const std::vector<tti::ingest::JoinedRecord> records =
        tti::ingest::join_tti_weather(canonical().tti, canonical().weather).records;
    return records;
}

/// One synthetic year, cheaper for aggregation tests.
inline const std::vector<tti::ingest::JoinedRecord>& year_joined() {
    static const std::vector<tti::ingest::JoinedRecord> records = [] {
        auto data = tti::ingest::synthesize_dataset({2012, 1, 1}, {2012, 12, 31}, 7);
        return tti::ingest::join_tti_weather(data.tti, data.weather).records;
    }();
    return records;
}

inline const tti::features::DesignMatrix& canonical_matrix(tti::features::Case c) {
    static const tti::features::DesignMatrix short_m =
        tti::features::assemble(canonical_joined(), tti::features::Case::short_term);
    static const tti::features::DesignMatrix long_m =
        tti::features::assemble(canonical_joined(), tti::features::Case::long_term);
    return c == tti::features::Case::short_term ? short_m : long_m;
}

}  // namespace fixtures
