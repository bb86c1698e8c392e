#pragma once

// JSON documents for instances, matchings, probability tables, DA
// distributions and lotteries. Students and schools are referred to by their
// external ids; exact probabilities are written as "num/den".

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pirmes/lottery.hpp"
#include "pirmes/market.hpp"
#include "pirmes/mechanisms.hpp"

namespace pirmes::io {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

Json instance_to_json(const MarketInstance& instance);
/// Throws Error naming the offending field.
MarketInstance instance_from_json(const Json& doc);

std::string serialize_instance(const MarketInstance& instance);
MarketInstance parse_instance(std::string_view text);

Json matching_to_json(const MarketInstance& instance, const Matching& m);
Matching matching_from_json(const MarketInstance& instance, const Json& doc);

Json table_to_json(const MarketInstance& instance, const RandomMatching<Rational>& table);
Json table_to_json(const MarketInstance& instance, const RandomMatching<double>& table);
/// Accepts fraction strings or numbers; missing entries are zero.
RandomMatching<double> table_from_json(const MarketInstance& instance, const Json& doc);

Json distribution_to_json(const MarketInstance& instance, const DaDistribution& dist);
DaDistribution distribution_from_json(const MarketInstance& instance, const Json& doc);

Json lottery_to_json(const MarketInstance& instance, const LotterySolution& sol);

/// Reads a random matching from any document that carries one: a bare
/// table, a DA distribution, or a lottery bundle ("q").
RandomMatching<double> random_matching_from_document(const MarketInstance& instance,
                                                     const Json& doc);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);
MarketInstance load_instance(const std::filesystem::path& path);
void save_instance(const std::filesystem::path& path, const MarketInstance& instance);

}  // namespace pirmes::io
