#include "pirmes/market.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

namespace pirmes {

// ---------------------------------------------------------------------------
// Rational formatting

std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw Error("malformed number '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto den = parse_int(text.substr(slash + 1), text);
    if (den == 0) throw Error("zero denominator in '" + std::string(text) + "'");
    return Rational(parse_int(text.substr(0, slash), text), den);
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) throw Error("too many decimals in '" + std::string(text) + "'");
    std::int64_t scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    std::string_view whole = text.substr(0, dot);
    const bool negative = !whole.empty() && whole.front() == '-';
    const std::int64_t int_part =
        whole.empty() || whole == "-" ? 0 : parse_int(whole, text);
    const std::int64_t frac_part = frac.empty() ? 0 : parse_int(frac, text);
    const std::int64_t magnitude = (int_part < 0 ? -int_part : int_part) * scale + frac_part;
    return Rational(negative ? -magnitude : magnitude, scale);
  }
  return Rational(parse_int(text, text));
}

// ---------------------------------------------------------------------------
// MarketInstance

MarketInstance::MarketInstance(MarketData data) : data_(std::move(data)) {
  const int n = num_students();
  const int m = num_schools();
  if (static_cast<int>(data_.capacity.size()) != m ||
      static_cast<int>(data_.priorities.size()) != m ||
      static_cast<int>(data_.preferences.size()) != n) {
    throw Error("market data: size mismatch between ids, capacities, preferences and priorities");
  }
  if (data_.dummy_school && (*data_.dummy_school < 0 || *data_.dummy_school >= m)) {
    throw Error("market data: dummy school index out of range");
  }
  rank_ = Eigen::MatrixXi::Zero(n, m);
  priority_ = Eigen::MatrixXi::Zero(n, m);
  edge_index_ = Eigen::MatrixXi::Constant(n, m, -1);

  for (int i = 0; i < n; ++i) {
    if (!student_lookup_.emplace(data_.students[i], i).second) {
      throw Error("market data: duplicate student id '" + data_.students[i] + "'");
    }
    int position = 0;
    for (int s : data_.preferences[i]) {
      if (s < 0 || s >= m) throw Error("market data: school index out of range");
      ++position;
      // Duplicates keep their first position; validate() reports them.
      if (rank_(i, s) == 0) rank_(i, s) = position;
    }
  }
  for (int s = 0; s < m; ++s) {
    if (!school_lookup_.emplace(data_.schools[s], s).second) {
      throw Error("market data: duplicate school id '" + data_.schools[s] + "'");
    }
    int cls = 0;
    for (const auto& group : data_.priorities[s]) {
      ++cls;
      for (int i : group) {
        if (i < 0 || i >= n) throw Error("market data: student index out of range");
        if (priority_(i, s) == 0) priority_(i, s) = cls;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int s : data_.preferences[i]) {
      if (edge_index_(i, s) >= 0) continue;
      edge_index_(i, s) = static_cast<int>(edges_.size());
      edges_.push_back({i, s});
    }
  }
}

std::optional<int> MarketInstance::find_student(const std::string& id) const {
  if (auto it = student_lookup_.find(id); it != student_lookup_.end()) return it->second;
  return std::nullopt;
}

std::optional<int> MarketInstance::find_school(const std::string& id) const {
  if (auto it = school_lookup_.find(id); it != school_lookup_.end()) return it->second;
  return std::nullopt;
}

bool MarketInstance::prefers(int i, int s1, int s2) const {
  if (s1 == kUnassigned || rank_(i, s1) == 0) return false;
  if (s2 == kUnassigned || rank_(i, s2) == 0) return true;
  return rank_(i, s1) < rank_(i, s2);
}

bool MarketInstance::has_strict_priorities() const {
  for (const auto& classes : data_.priorities) {
    for (const auto& group : classes) {
      if (group.size() > 1) return false;
    }
  }
  return true;
}

bool operator==(const MarketInstance& a, const MarketInstance& b) {
  const auto& x = a.data_;
  const auto& y = b.data_;
  return x.students == y.students && x.schools == y.schools && x.capacity == y.capacity &&
         x.preferences == y.preferences && x.priorities == y.priorities &&
         x.dummy_school == y.dummy_school;
}

std::size_t MatchingHash::operator()(const Matching& m) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (int s : m.assignment()) {
    h ^= static_cast<std::size_t>(s + 1);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const MarketInstance& instance) {
  std::vector<Violation> out;
  const int n = instance.num_students();
  const int m = instance.num_schools();
  for (int s = 0; s < m; ++s) {
    if (instance.capacity(s) < 1) {
      out.push_back({Violation::Kind::kCapacity, -1, s,
                     "school '" + instance.school_id(s) + "' has capacity " +
                         std::to_string(instance.capacity(s)) + " (must be >= 1)"});
    }
  }
  for (int i = 0; i < n; ++i) {
    std::vector<int> seen(m, 0);
    for (int s : instance.preferences(i)) {
      if (seen[s]++ == 1) {
        out.push_back({Violation::Kind::kDuplicatePreference, i, s,
                       "student '" + instance.student_id(i) + "' lists school '" +
                           instance.school_id(s) + "' more than once"});
      }
    }
  }
  for (int s = 0; s < m; ++s) {
    std::vector<int> seen(n, 0);
    int cls = 0;
    for (const auto& group : instance.priority_classes(s)) {
      ++cls;
      if (group.empty()) {
        out.push_back({Violation::Kind::kEmptyPriorityClass, -1, s,
                       "school '" + instance.school_id(s) + "' has empty priority class " +
                           std::to_string(cls)});
      }
      for (int i : group) {
        if (seen[i]++ == 1) {
          out.push_back({Violation::Kind::kPriorityPartition, i, s,
                         "student '" + instance.student_id(i) +
                             "' appears in several priority classes of school '" +
                             instance.school_id(s) + "'"});
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      const bool listed = seen[i] > 0;
      if (listed != instance.is_edge(i, s)) {
        out.push_back({Violation::Kind::kMutualAcceptability, i, s,
                       listed ? "school '" + instance.school_id(s) + "' ranks student '" +
                                    instance.student_id(i) + "' who does not list it"
                              : "student '" + instance.student_id(i) + "' lists school '" +
                                    instance.school_id(s) + "' which does not rank them"});
      }
    }
  }
  return out;
}

void check_matching(const MarketInstance& instance, const Matching& m) {
  if (m.size() != instance.num_students()) {
    throw Error("matching has " + std::to_string(m.size()) + " entries for " +
                std::to_string(instance.num_students()) + " students");
  }
  std::vector<int> load(instance.num_schools(), 0);
  for (int i = 0; i < m.size(); ++i) {
    const int s = m[i];
    if (s == kUnassigned) continue;
    if (s < 0 || s >= instance.num_schools() || !instance.is_edge(i, s)) {
      throw Error("matching assigns student '" + instance.student_id(i) +
                  "' to a school outside their preference list");
    }
    ++load[s];
  }
  for (int s = 0; s < instance.num_schools(); ++s) {
    if (load[s] > instance.capacity(s)) {
      throw Error("matching exceeds the capacity of school '" + instance.school_id(s) + "'");
    }
  }
}

int rank_of(const MarketInstance& instance, int i, int s) {
  if (i < 0 || i >= instance.num_students() || s < 0 || s >= instance.num_schools() ||
      !instance.is_edge(i, s)) {
    throw Error("not an edge");
  }
  return instance.rank(i, s);
}

int priority_rank(const MarketInstance& instance, int i, int s) {
  if (i < 0 || i >= instance.num_students() || s < 0 || s >= instance.num_schools() ||
      instance.priority_class(i, s) == 0 || !instance.is_edge(i, s)) {
    throw Error("not an edge");
  }
  return instance.priority_class(i, s);
}

// ---------------------------------------------------------------------------
// Stability

std::vector<int> school_loads(const MarketInstance& instance, const Matching& m) {
  std::vector<int> load(instance.num_schools(), 0);
  for (int s : m.assignment()) {
    if (s != kUnassigned) ++load[s];
  }
  return load;
}

StabilityReport is_weakly_stable(const MarketInstance& instance, const Matching& m) {
  check_matching(instance, m);
  const int m_schools = instance.num_schools();
  // Worst admitted priority class per school (0 when empty).
  std::vector<int> worst_admitted(m_schools, 0);
  std::vector<int> load(m_schools, 0);
  for (int i = 0; i < m.size(); ++i) {
    const int s = m[i];
    if (s == kUnassigned) continue;
    ++load[s];
    worst_admitted[s] = std::max(worst_admitted[s], instance.priority_class(i, s));
  }
  StabilityReport report;
  for (const Edge& e : instance.edges()) {
    if (!instance.prefers(e.student, e.school, m[e.student])) continue;
    if (load[e.school] < instance.capacity(e.school)) {
      report.blocking_pairs.push_back({e.student, e.school, true});
      continue;
    }
    const int cls = instance.priority_class(e.student, e.school);
    if (cls != 0 && cls < worst_admitted[e.school]) {
      report.blocking_pairs.push_back({e.student, e.school, false});
    }
  }
  report.stable = report.blocking_pairs.empty();
  return report;
}

// ---------------------------------------------------------------------------
// Ranks

int total_rank(const MarketInstance& instance, const Matching& m) {
  int total = 0;
  for (int i = 0; i < m.size(); ++i) total += student_rank(instance, m, i);
  return total;
}

Rational average_rank(const MarketInstance& instance, const Matching& m) {
  if (instance.num_students() == 0) return Rational(0);
  return Rational(total_rank(instance, m), instance.num_students());
}

const char* to_string(SdVerdict v) {
  switch (v) {
    case SdVerdict::kStrictlyDominates:
      return "strictly-dominates";
    case SdVerdict::kEqual:
      return "equal";
    case SdVerdict::kWeaklyDominatesNotStrictly:
      return "weakly-dominates-not-strictly";
    case SdVerdict::kIncomparable:
      return "incomparable";
  }
  return "?";
}

MarketInstance augment_with_dummy(const MarketInstance& instance) {
  MarketData data = instance.data();
  const int n = instance.num_students();
  const int dummy = static_cast<int>(data.schools.size());
  std::string id = "dummy";
  while (instance.find_school(id)) id = "_" + id;
  data.schools.push_back(id);
  data.capacity.push_back(std::max(n, 1));
  std::vector<int> everyone(n);
  std::iota(everyone.begin(), everyone.end(), 0);
  data.priorities.push_back(n > 0 ? std::vector<std::vector<int>>{everyone}
                                  : std::vector<std::vector<int>>{});
  for (auto& pref : data.preferences) pref.push_back(dummy);
  data.dummy_school = dummy;
  return MarketInstance(std::move(data));
}

Matching lift_to_augmented(const MarketInstance& augmented, const Matching& m) {
  Matching out(augmented.num_students());
  for (int i = 0; i < augmented.num_students(); ++i) {
    out.assign(i, m[i] == kUnassigned ? *augmented.dummy_school() : m[i]);
  }
  return out;
}

}  // namespace pirmes
