#include "pirmes/io.hpp"

#include <fstream>
#include <sstream>

namespace pirmes::io {

namespace {

const Json& field(const Json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(where + ": missing field '" + key + "'");
  }
  return doc.at(key);
}

std::string as_string(const Json& value, const std::string& where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  throw Error(where + ": expected a string id");
}

int student_index(const MarketInstance& instance, const std::string& id, const std::string& where) {
  if (auto i = instance.find_student(id)) return *i;
  throw Error(where + ": unknown student '" + id + "'");
}

int school_index(const MarketInstance& instance, const std::string& id, const std::string& where) {
  if (auto s = instance.find_school(id)) return *s;
  throw Error(where + ": unknown school '" + id + "'");
}

double probability(const Json& value, const std::string& where) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    try {
      return to_double(parse_rational(value.get<std::string>()));
    } catch (const Error& e) {
      throw Error(where + ": " + e.what());
    }
  }
  throw Error(where + ": expected a probability");
}

void check_format(const Json& doc, const char* expected) {
  if (!doc.is_object()) throw Error(std::string(expected) + ": document must be an object");
  if (doc.contains("format") && doc.at("format") != expected) {
    throw Error(std::string("expected format '") + expected + "', found " + doc.at("format").dump());
  }
  if (doc.contains("version") && doc.at("version") != kFormatVersion) {
    throw Error(std::string(expected) + ": unsupported version " + doc.at("version").dump());
  }
}

}  // namespace

Json instance_to_json(const MarketInstance& instance) {
  Json doc;
  doc["format"] = "pirmes-instance";
  doc["version"] = kFormatVersion;
  doc["students"] = instance.data().students;
  Json schools = Json::array();
  for (int s = 0; s < instance.num_schools(); ++s) {
    schools.push_back({{"id", instance.school_id(s)}, {"capacity", instance.capacity(s)}});
  }
  doc["schools"] = std::move(schools);
  Json prefs = Json::object();
  for (int i = 0; i < instance.num_students(); ++i) {
    Json list = Json::array();
    for (int s : instance.preferences(i)) list.push_back(instance.school_id(s));
    prefs[instance.student_id(i)] = std::move(list);
  }
  doc["preferences"] = std::move(prefs);
  Json prio = Json::object();
  for (int s = 0; s < instance.num_schools(); ++s) {
    Json classes = Json::array();
    for (const auto& group : instance.priority_classes(s)) {
      Json ids = Json::array();
      for (int i : group) ids.push_back(instance.student_id(i));
      classes.push_back(std::move(ids));
    }
    prio[instance.school_id(s)] = std::move(classes);
  }
  doc["priorities"] = std::move(prio);
  if (auto d = instance.dummy_school()) doc["dummy_school"] = instance.school_id(*d);
  return doc;
}

MarketInstance instance_from_json(const Json& doc) {
  check_format(doc, "pirmes-instance");
  MarketData data;
  const Json& students = field(doc, "students", "instance");
  if (!students.is_array()) throw Error("instance.students: expected a list");
  std::unordered_map<std::string, int> student_of;
  for (std::size_t k = 0; k < students.size(); ++k) {
    const std::string id = as_string(students[k], "students[" + std::to_string(k) + "]");
    student_of.emplace(id, static_cast<int>(k));
    data.students.push_back(id);
  }
  const Json& schools = field(doc, "schools", "instance");
  if (!schools.is_array()) throw Error("instance.schools: expected a list");
  std::unordered_map<std::string, int> school_of;
  for (std::size_t k = 0; k < schools.size(); ++k) {
    const std::string where = "schools[" + std::to_string(k) + "]";
    const std::string id = as_string(field(schools[k], "id", where), where + ".id");
    if (!schools[k].contains("capacity")) {
      throw Error(where + " (school '" + id + "'): missing field 'capacity'");
    }
    const Json& cap = schools[k].at("capacity");
    if (!cap.is_number_integer()) throw Error(where + " (school '" + id + "'): capacity must be an integer");
    school_of.emplace(id, static_cast<int>(k));
    data.schools.push_back(id);
    data.capacity.push_back(cap.get<int>());
  }
  auto lookup = [](const auto& table, const std::string& id, const std::string& where) {
    auto it = table.find(id);
    if (it == table.end()) throw Error(where + ": unknown id '" + id + "'");
    return it->second;
  };

  const Json& prefs = field(doc, "preferences", "instance");
  data.preferences.resize(data.students.size());
  for (std::size_t i = 0; i < data.students.size(); ++i) {
    const std::string where = "preferences[\"" + data.students[i] + "\"]";
    if (!prefs.contains(data.students[i])) {
      if (prefs.is_object()) continue;  // empty list
      throw Error("instance.preferences: expected an object");
    }
    for (const Json& s : prefs.at(data.students[i])) {
      data.preferences[i].push_back(lookup(school_of, as_string(s, where), where));
    }
  }
  for (const auto& [key, _] : prefs.items()) lookup(student_of, key, "preferences");

  const Json& prio = field(doc, "priorities", "instance");
  data.priorities.resize(data.schools.size());
  for (std::size_t s = 0; s < data.schools.size(); ++s) {
    const std::string where = "priorities[\"" + data.schools[s] + "\"]";
    if (!prio.contains(data.schools[s])) continue;
    for (const Json& group : prio.at(data.schools[s])) {
      if (!group.is_array()) throw Error(where + ": each priority class must be a list");
      std::vector<int> members;
      for (const Json& i : group) members.push_back(lookup(student_of, as_string(i, where), where));
      data.priorities[s].push_back(std::move(members));
    }
  }
  for (const auto& [key, _] : prio.items()) lookup(school_of, key, "priorities");
  if (doc.contains("dummy_school")) {
    data.dummy_school = lookup(school_of, as_string(doc.at("dummy_school"), "dummy_school"), "dummy_school");
  }
  return MarketInstance(std::move(data));
}

std::string serialize_instance(const MarketInstance& instance) {
  return instance_to_json(instance).dump(2) + "\n";
}

MarketInstance parse_instance(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("instance document: ") + e.what());
  }
  return instance_from_json(doc);
}

Json matching_to_json(const MarketInstance& instance, const Matching& m) {
  Json doc = Json::object();
  for (int i = 0; i < m.size(); ++i) {
    doc[instance.student_id(i)] = m[i] == kUnassigned ? Json(nullptr) : Json(instance.school_id(m[i]));
  }
  return doc;
}

Matching matching_from_json(const MarketInstance& instance, const Json& doc) {
  const Json& body = doc.contains("matching") ? doc.at("matching") : doc;
  Matching m(instance.num_students());
  for (const auto& [key, value] : body.items()) {
    const int i = student_index(instance, key, "matching");
    if (!value.is_null()) m.assign(i, school_index(instance, as_string(value, "matching"), "matching"));
  }
  check_matching(instance, m);
  return m;
}

namespace {

template <typename Scalar, typename Format>
Json table_json(const MarketInstance& instance, const RandomMatching<Scalar>& table, Format format) {
  Json doc;
  doc["format"] = "pirmes-random-matching";
  doc["version"] = kFormatVersion;
  Json entries = Json::object();
  for (int i = 0; i < instance.num_students(); ++i) {
    Json row = Json::object();
    for (int s : instance.preferences(i)) {
      if (table(i, s) != Scalar(0)) row[instance.school_id(s)] = format(table(i, s));
    }
    entries[instance.student_id(i)] = std::move(row);
  }
  doc["probabilities"] = std::move(entries);
  return doc;
}

}  // namespace

Json table_to_json(const MarketInstance& instance, const RandomMatching<Rational>& table) {
  return table_json(instance, table, [](const Rational& r) { return format_rational(r); });
}

Json table_to_json(const MarketInstance& instance, const RandomMatching<double>& table) {
  return table_json(instance, table, [](double x) { return x; });
}

RandomMatching<double> table_from_json(const MarketInstance& instance, const Json& doc) {
  check_format(doc, "pirmes-random-matching");
  const Json& entries = field(doc, "probabilities", "random matching");
  RandomMatching<double> table = RandomMatching<double>::Zero(instance.num_students(), instance.num_schools());
  for (const auto& [student, row] : entries.items()) {
    const int i = student_index(instance, student, "probabilities");
    for (const auto& [school, value] : row.items()) {
      const std::string where = "probabilities[\"" + student + "\"][\"" + school + "\"]";
      table(i, school_index(instance, school, where)) = probability(value, where);
    }
  }
  return table;
}

Json distribution_to_json(const MarketInstance& instance, const DaDistribution& dist) {
  Json doc;
  doc["format"] = "pirmes-da-distribution";
  doc["version"] = kFormatVersion;
  doc["provenance"] = {{"kind", dist.provenance.exact ? "exact" : "sampled"},
                       {"mode", to_string(dist.provenance.mode)},
                       {"draws", dist.provenance.draws},
                       {"seed", dist.provenance.seed}};
  Json support = Json::array();
  for (const auto& wm : dist.support) {
    support.push_back({{"weight", format_rational(wm.weight)},
                       {"matching", matching_to_json(instance, wm.matching)}});
  }
  doc["support"] = std::move(support);
  doc["probabilities"] = table_to_json(instance, dist.prob).at("probabilities");
  return doc;
}

DaDistribution distribution_from_json(const MarketInstance& instance, const Json& doc) {
  check_format(doc, "pirmes-da-distribution");
  DaDistribution dist;
  const Json& prov = field(doc, "provenance", "distribution");
  dist.provenance.exact = field(prov, "kind", "provenance") == "exact";
  dist.provenance.mode = field(prov, "mode", "provenance") == "multiple" ? TieBreaking::Mode::kMultiple
                                                                        : TieBreaking::Mode::kSingle;
  dist.provenance.draws = field(prov, "draws", "provenance").get<std::int64_t>();
  dist.provenance.seed = field(prov, "seed", "provenance").get<std::uint64_t>();
  dist.prob = RandomMatching<Rational>::Zero(instance.num_students(), instance.num_schools());
  for (const Json& entry : field(doc, "support", "distribution")) {
    const Rational w = parse_rational(as_string(field(entry, "weight", "support"), "support.weight"));
    Matching m = matching_from_json(instance, field(entry, "matching", "support"));
    for (int i = 0; i < m.size(); ++i) {
      if (m[i] != kUnassigned) dist.prob(i, m[i]) += w;
    }
    dist.support.push_back({std::move(m), w});
  }
  return dist;
}

Json lottery_to_json(const MarketInstance& instance, const LotterySolution& sol) {
  Json doc;
  doc["format"] = "pirmes-lottery";
  doc["version"] = kFormatVersion;
  doc["status"] = to_string(sol.status);
  doc["average_rank"] = sol.average_rank;
  doc["objective"] = sol.objective;
  doc["rounds"] = sol.rounds;
  doc["probabilities"] = table_to_json(instance, sol.q).at("probabilities");
  Json support = Json::array();
  for (std::size_t l = 0; l < sol.support.size(); ++l) {
    support.push_back({{"weight", sol.weights[l]}, {"matching", matching_to_json(instance, sol.support[l])}});
  }
  doc["decomposition"] = std::move(support);
  Json mu = Json::object();
  for (int e = 0; e < instance.num_edges(); ++e) {
    if (e >= sol.duals.mu.size() || sol.duals.mu(e) == 0.0) continue;
    const auto [i, s] = instance.edges()[e];
    mu[instance.student_id(i) + "|" + instance.school_id(s)] = sol.duals.mu(e);
  }
  doc["duals"] = {{"mu", std::move(mu)}, {"delta", sol.duals.delta}};
  Json log = Json::array();
  for (const auto& it : sol.log) {
    log.push_back({{"round", it.round},
                   {"average_rank", it.average_rank},
                   {"support", it.support_size},
                   {"added", it.columns_added},
                   {"artificial", it.artificial_active},
                   {"seconds", it.seconds}});
  }
  doc["log"] = std::move(log);
  return doc;
}

RandomMatching<double> random_matching_from_document(const MarketInstance& instance,
                                                     const Json& doc) {
  const std::string format = doc.value("format", std::string("pirmes-random-matching"));
  if (format == "pirmes-da-distribution") {
    return distribution_from_json(instance, doc).prob.cast<double>();
  }
  Json table;
  table["format"] = "pirmes-random-matching";
  table["probabilities"] = field(doc, "probabilities", format);
  return table_from_json(instance, table);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << "\n";
}

MarketInstance load_instance(const std::filesystem::path& path) {
  try {
    return instance_from_json(read_json(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_instance(const std::filesystem::path& path, const MarketInstance& instance) {
  write_json(path, instance_to_json(instance));
}

}  // namespace pirmes::io
