#pragma once

// CSV persistence for flock corpora.
//
//   # schema_version=1
//   # flock=1 house=1 length_m=150 width_m=16 capacity=34800 initial_birds=34800 mdw0_g=42.1
//   flock_id,day,t_min,t_avg,t_max,h_min,h_avg,h_max,mdw_g,dfc_kg,dm_birds,nlb
//   1,1,29.4,31.4,33.4,...
//
// The `# flock=` lines carry what the row columns cannot (geometry, initial
// flock size, arrival weight). Doubles are written in shortest round-trip
// form, so store followed by load reproduces every value bit for bit.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "flockplan/domain.hpp"

namespace flockplan::dataset {

inline constexpr const char* kCsvHeader = "flock_id,day,t_min,t_avg,t_max,h_min,h_avg,h_max,mdw_g,dfc_kg,dm_birds,nlb";

void write_samples(std::ostream& out, const std::vector<FlockSample>& samples);
std::vector<FlockSample> read_samples(std::istream& in);

void store_samples(const std::vector<FlockSample>& samples, const std::filesystem::path& path);
std::vector<FlockSample> load_samples(const std::filesystem::path& path);

} // namespace flockplan::dataset
