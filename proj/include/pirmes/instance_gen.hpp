#pragma once

// Synthetic markets (random utility model with locations and walk zones) and
// priority structures built from raw admission records.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "pirmes/market.hpp"

namespace pirmes {

enum class CapacityRule {
  kEqualSplit,  ///< floor(n/m) each, remainder to the first schools
  kCeil,        ///< ceil(n/m) each
};

struct GenConfig {
  int n_students = 40;
  int n_schools = 8;
  double alpha = 0.0;  ///< weight of the common school quality
  double beta = 0.2;   ///< weight of distance
  std::uint64_t seed = 0;
  CapacityRule capacity_rule = CapacityRule::kEqualSplit;
};

/// Throws Error on out-of-range parameters.
void validate(const GenConfig& config);

/// Draw order is fixed: Z0 per school, Z row-major per student and school,
/// then student locations, then school locations (x before y).
struct GeneratedMarket {
  MarketInstance instance;
  std::vector<int> walk_zone;  ///< closest school per student
};

GeneratedMarket generate_with_metadata(const GenConfig& config);
MarketInstance generate(const GenConfig& config);

// ---------------------------------------------------------------------------
// Admission records

struct RawRecord {
  std::string family;
  std::vector<std::string> choices;   ///< best first
  std::vector<std::string> siblings;  ///< schools where the family has a sibling
  std::vector<double> distances;      ///< per choice; carried, not used by the rules
};

struct SchoolRecord {
  std::string id;
  int capacity = 0;
};

enum class SiblingRule { kSib, kNoSib };
enum class DistanceRule { kRelDist, kDist3 };

/// Throws Error on empty or duplicated choices and on unknown schools.
void validate(const std::vector<RawRecord>& records, const std::vector<SchoolRecord>& schools);

/// One school per record list entry. Priority classes at a school, best
/// first: siblings (Sib only), then by preference rank (RelDist: one class
/// per rank; Dist3: ranks 1-3, then the rest). Empty classes are dropped.
MarketInstance estonian_priorities(const std::vector<RawRecord>& records,
                                   const std::vector<SchoolRecord>& schools, SiblingRule sibling,
                                   DistanceRule distance);

/// Comma-separated, header row required. Columns: family, choice_1..choice_k,
/// siblings (';'-separated school ids), distances (';'-separated, optional).
std::vector<RawRecord> parse_records_csv(std::istream& in);
/// Columns: id, capacity.
std::vector<SchoolRecord> parse_schools_csv(std::istream& in);

std::vector<RawRecord> load_records_csv(const std::filesystem::path& path);
std::vector<SchoolRecord> load_schools_csv(const std::filesystem::path& path);

}  // namespace pirmes
