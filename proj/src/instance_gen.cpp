#include "pirmes/instance_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Core>

#include "pirmes/random.hpp"

namespace pirmes {

void validate(const GenConfig& config) {
  if (config.n_students < 0) throw Error("n_students must be non-negative");
  if (config.n_schools < 1) throw Error("n_schools must be positive");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) throw Error("beta must lie in [0, 1]");
}

GeneratedMarket generate_with_metadata(const GenConfig& config) {
  validate(config);
  const int n = config.n_students;
  const int m = config.n_schools;
  Rng rng(config.seed);

  Eigen::VectorXd z0(m);
  for (int j = 0; j < m; ++j) z0(j) = rng.normal();
  Eigen::MatrixXd z(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) z(i, j) = rng.normal();
  }
  Eigen::MatrixX2d student_loc(n, 2);
  for (int i = 0; i < n; ++i) {
    student_loc(i, 0) = rng.uniform();
    student_loc(i, 1) = rng.uniform();
  }
  Eigen::MatrixX2d school_loc(m, 2);
  for (int j = 0; j < m; ++j) {
    school_loc(j, 0) = rng.uniform();
    school_loc(j, 1) = rng.uniform();
  }

  MarketData data;
  for (int i = 0; i < n; ++i) data.students.push_back("i" + std::to_string(i + 1));
  for (int j = 0; j < m; ++j) data.schools.push_back("s" + std::to_string(j + 1));
  for (int j = 0; j < m; ++j) {
    if (config.capacity_rule == CapacityRule::kCeil) {
      data.capacity.push_back((n + m - 1) / m);
    } else {
      data.capacity.push_back(n / m + (j < n % m ? 1 : 0));
    }
  }

  std::vector<int> walk_zone(n);
  data.preferences.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd dist(m);
    for (int j = 0; j < m; ++j) dist(j) = (student_loc.row(i) - school_loc.row(j)).norm();
    Eigen::Index closest;
    dist.minCoeff(&closest);
    walk_zone[i] = static_cast<int>(closest);

    Eigen::VectorXd u = -config.beta * dist +
                        (1.0 - config.beta) * (config.alpha * z0 + (1.0 - config.alpha) * z.row(i).transpose());
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return u(a) > u(b); });
    data.preferences[i] = std::move(order);
  }

  data.priorities.resize(m);
  for (int j = 0; j < m; ++j) {
    std::vector<int> zone, rest;
    for (int i = 0; i < n; ++i) (walk_zone[i] == j ? zone : rest).push_back(i);
    if (!zone.empty()) data.priorities[j].push_back(std::move(zone));
    if (!rest.empty()) data.priorities[j].push_back(std::move(rest));
  }
  return {MarketInstance(std::move(data)), std::move(walk_zone)};
}

MarketInstance generate(const GenConfig& config) {
  return generate_with_metadata(config).instance;
}

void validate(const std::vector<RawRecord>& records, const std::vector<SchoolRecord>& schools) {
  std::unordered_set<std::string> known;
  for (const auto& s : schools) {
    if (s.capacity < 0) throw Error("school '" + s.id + "': negative capacity");
    if (!known.insert(s.id).second) throw Error("school '" + s.id + "' listed twice");
  }
  std::unordered_set<std::string> families;
  for (const auto& r : records) {
    if (!families.insert(r.family).second) throw Error("family '" + r.family + "' listed twice");
    if (r.choices.empty()) throw Error("family '" + r.family + "': no choices");
    std::unordered_set<std::string> seen;
    for (const auto& c : r.choices) {
      if (!known.count(c)) throw Error("family '" + r.family + "': unknown school '" + c + "'");
      if (!seen.insert(c).second) throw Error("family '" + r.family + "': school '" + c + "' chosen twice");
    }
    for (const auto& c : r.siblings) {
      if (!known.count(c)) throw Error("family '" + r.family + "': unknown sibling school '" + c + "'");
    }
  }
}

MarketInstance estonian_priorities(const std::vector<RawRecord>& records,
                                   const std::vector<SchoolRecord>& schools, SiblingRule sibling,
                                   DistanceRule distance) {
  validate(records, schools);
  MarketData data;
  std::unordered_map<std::string, int> school_of;
  for (const auto& s : schools) {
    school_of.emplace(s.id, static_cast<int>(data.schools.size()));
    data.schools.push_back(s.id);
    data.capacity.push_back(s.capacity);
  }
  const int m = static_cast<int>(schools.size());
  // (layer, student) keys per school; layer 0 is reserved for siblings.
  std::vector<std::vector<std::pair<int, int>>> keyed(m);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    data.students.push_back(r.family);
    std::vector<int> prefs;
    for (std::size_t k = 0; k < r.choices.size(); ++k) {
      const int s = school_of.at(r.choices[k]);
      prefs.push_back(s);
      const bool has_sibling =
          sibling == SiblingRule::kSib &&
          std::find(r.siblings.begin(), r.siblings.end(), r.choices[k]) != r.siblings.end();
      const int rank = static_cast<int>(k) + 1;
      const int layer = has_sibling ? 0 : (distance == DistanceRule::kRelDist ? rank : (rank <= 3 ? 1 : 2));
      keyed[s].emplace_back(layer, static_cast<int>(i));
    }
    data.preferences.push_back(std::move(prefs));
  }
  data.priorities.resize(m);
  for (int s = 0; s < m; ++s) {
    std::sort(keyed[s].begin(), keyed[s].end());
    for (std::size_t a = 0; a < keyed[s].size();) {
      std::size_t b = a;
      std::vector<int> group;
      while (b < keyed[s].size() && keyed[s][b].first == keyed[s][a].first) group.push_back(keyed[s][b++].second);
      data.priorities[s].push_back(std::move(group));
      a = b;
    }
  }
  return MarketInstance(std::move(data));
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_list(const std::string& cell) {
  std::vector<std::string> out;
  for (auto& item : split(cell, ';')) {
    if (!item.empty()) out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

std::vector<RawRecord> parse_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("records: missing header row");
  const auto header = split(line, ',');
  int family_col = -1, sibling_col = -1, distance_col = -1;
  std::vector<std::pair<int, int>> choice_cols;  // (k, column)
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "family") family_col = c;
    else if (h == "sibling_school_ids" || h == "siblings") sibling_col = c;
    else if (h == "distances") distance_col = c;
    else if (h.rfind("choice_", 0) == 0) {
      try {
        choice_cols.emplace_back(std::stoi(h.substr(7)), c);
      } catch (const std::exception&) {
        throw Error("records: bad column name '" + h + "'");
      }
    }
  }
  if (family_col < 0) throw Error("records: missing column 'family'");
  if (choice_cols.empty()) throw Error("records: no choice_k columns");
  std::sort(choice_cols.begin(), choice_cols.end());

  std::vector<RawRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    auto cell = [&](int c) { return c >= 0 && c < static_cast<int>(cells.size()) ? cells[c] : std::string(); };
    RawRecord r;
    r.family = cell(family_col);
    if (r.family.empty()) throw Error("records line " + std::to_string(line_no) + ": empty family");
    for (const auto& [k, c] : choice_cols) {
      if (!cell(c).empty()) r.choices.push_back(cell(c));
    }
    r.siblings = split_list(cell(sibling_col));
    for (const auto& d : split_list(cell(distance_col))) {
      try {
        r.distances.push_back(std::stod(d));
      } catch (const std::exception&) {
        throw Error("records line " + std::to_string(line_no) + ": bad distance '" + d + "'");
      }
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SchoolRecord> parse_schools_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("schools: missing header row");
  const auto header = split(line, ',');
  const auto id_col = std::find(header.begin(), header.end(), "id") - header.begin();
  const auto cap_col = std::find(header.begin(), header.end(), "capacity") - header.begin();
  if (id_col == static_cast<long>(header.size())) throw Error("schools: missing column 'id'");
  if (cap_col == static_cast<long>(header.size())) throw Error("schools: missing column 'capacity'");
  std::vector<SchoolRecord> schools;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (std::max(id_col, cap_col) >= static_cast<long>(cells.size())) {
      throw Error("schools line " + std::to_string(line_no) + ": too few columns");
    }
    SchoolRecord s{cells[id_col], 0};
    try {
      s.capacity = std::stoi(cells[cap_col]);
    } catch (const std::exception&) {
      throw Error("schools line " + std::to_string(line_no) + ": bad capacity for school '" + s.id + "'");
    }
    schools.push_back(std::move(s));
  }
  return schools;
}

std::vector<RawRecord> load_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return parse_records_csv(in);
}

std::vector<SchoolRecord> load_schools_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return parse_schools_csv(in);
}

}  // namespace pirmes
