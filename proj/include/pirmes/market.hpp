#pragma once

// Market data model: instances, deterministic matchings and probability
// tables, together with ranks, weak stability and sd-dominance.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "pirmes/rational.hpp"

namespace pirmes {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kUnassigned = -1;

struct Edge {
  int student;
  int school;
};

/// Raw instance description. Students and schools are dense indices; the id
/// vectors keep the external names. Priority classes are ordered from the
/// highest-priority class downwards.
struct MarketData {
  std::vector<std::string> students;
  std::vector<std::string> schools;
  std::vector<int> capacity;
  std::vector<std::vector<int>> preferences;
  std::vector<std::vector<std::vector<int>>> priorities;
  std::optional<int> dummy_school;
};

/// Immutable many-to-one market with precomputed rank lookups.
///
/// The edge set is taken from the preference lists: (i, s) is an edge iff s
/// appears in pref(i). For a valid instance this coincides with mutual
/// acceptability.
class MarketInstance {
 public:
  MarketInstance() = default;
  /// Throws Error on structurally malformed data (index out of range, size
  /// mismatch). Semantic problems are reported by validate().
  explicit MarketInstance(MarketData data);

  const MarketData& data() const { return data_; }

  int num_students() const { return static_cast<int>(data_.students.size()); }
  int num_schools() const { return static_cast<int>(data_.schools.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::string& student_id(int i) const { return data_.students[i]; }
  const std::string& school_id(int s) const { return data_.schools[s]; }
  std::optional<int> find_student(const std::string& id) const;
  std::optional<int> find_school(const std::string& id) const;

  std::span<const int> preferences(int i) const { return data_.preferences[i]; }
  const std::vector<std::vector<int>>& priority_classes(int s) const {
    return data_.priorities[s];
  }
  int capacity(int s) const { return data_.capacity[s]; }
  std::optional<int> dummy_school() const { return data_.dummy_school; }

  bool is_edge(int i, int s) const { return rank_(i, s) > 0; }
  /// 1-based position of s in pref(i); 0 when s is not acceptable.
  int rank(int i, int s) const { return rank_(i, s); }
  /// 1-based priority class of i at s; 0 when i is not listed by s.
  int priority_class(int i, int s) const { return priority_(i, s); }
  int num_priority_classes(int s) const {
    return static_cast<int>(data_.priorities[s].size());
  }
  /// s1 strictly preferred by i to s2; s2 may be kUnassigned.
  bool prefers(int i, int s1, int s2) const;

  const std::vector<Edge>& edges() const { return edges_; }
  /// Index into edges(), or -1.
  int edge_index(int i, int s) const { return edge_index_(i, s); }

  const Eigen::MatrixXi& rank_matrix() const { return rank_; }

  /// Every indifference class is a singleton.
  bool has_strict_priorities() const;

  friend bool operator==(const MarketInstance& a, const MarketInstance& b);

 private:
  MarketData data_;
  Eigen::MatrixXi rank_;
  Eigen::MatrixXi priority_;
  Eigen::MatrixXi edge_index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, int> student_lookup_;
  std::unordered_map<std::string, int> school_lookup_;
};

/// Deterministic assignment: school index per student or kUnassigned.
class Matching {
 public:
  Matching() = default;
  explicit Matching(int num_students) : school_of_(num_students, kUnassigned) {}
  explicit Matching(std::vector<int> school_of) : school_of_(std::move(school_of)) {}

  int size() const { return static_cast<int>(school_of_.size()); }
  int operator[](int i) const { return school_of_[i]; }
  void assign(int i, int s) { school_of_[i] = s; }
  const std::vector<int>& assignment() const { return school_of_; }

  friend bool operator==(const Matching&, const Matching&) = default;
  friend auto operator<=>(const Matching&, const Matching&) = default;

 private:
  std::vector<int> school_of_;
};

struct MatchingHash {
  std::size_t operator()(const Matching& m) const noexcept;
};

/// Per-edge probabilities stored densely as a students x schools table.
template <typename Scalar>
using RandomMatching = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
RandomMatching<Scalar> indicator(const MarketInstance& instance, const Matching& m) {
  RandomMatching<Scalar> table =
      RandomMatching<Scalar>::Zero(instance.num_students(), instance.num_schools());
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] != kUnassigned) table(i, m[i]) = Scalar(1);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  enum class Kind {
    kCapacity,
    kDuplicatePreference,
    kMutualAcceptability,
    kPriorityPartition,
    kEmptyPriorityClass,
  };
  Kind kind;
  int student = -1;
  int school = -1;
  std::string message;
};

std::vector<Violation> validate(const MarketInstance& instance);

/// Throws Error when m is not a feasible matching of the instance.
void check_matching(const MarketInstance& instance, const Matching& m);

/// Throws Error unless s is acceptable to i ("not an edge").
int rank_of(const MarketInstance& instance, int i, int s);
int priority_rank(const MarketInstance& instance, int i, int s);

// ---------------------------------------------------------------------------
// Weak stability

struct BlockingPair {
  int student;
  int school;
  bool wasteful;  ///< free seat (case i) rather than justified envy (case ii)

  friend bool operator==(const BlockingPair&, const BlockingPair&) = default;
};

struct StabilityReport {
  bool stable = true;
  std::vector<BlockingPair> blocking_pairs;
};

/// Exhaustive scan over all edges; throws Error on an infeasible matching.
StabilityReport is_weakly_stable(const MarketInstance& instance, const Matching& m);

std::vector<int> school_loads(const MarketInstance& instance, const Matching& m);

// ---------------------------------------------------------------------------
// Ranks and dominance

/// Rank charged to an unassigned student: one past the end of their list.
inline int unassigned_rank(const MarketInstance& instance, int i) {
  return static_cast<int>(instance.preferences(i).size()) + 1;
}

inline int student_rank(const MarketInstance& instance, const Matching& m, int i) {
  return m[i] == kUnassigned ? unassigned_rank(instance, i) : instance.rank(i, m[i]);
}

int total_rank(const MarketInstance& instance, const Matching& m);
Rational average_rank(const MarketInstance& instance, const Matching& m);

/// Expected rank of student i; unassigned mass is charged unassigned_rank().
template <typename Scalar>
Scalar expected_rank(const MarketInstance& instance, const RandomMatching<Scalar>& x, int i) {
  Scalar total(0);
  Scalar mass(0);
  for (int s : instance.preferences(i)) {
    total += x(i, s) * Scalar(instance.rank(i, s));
    mass += x(i, s);
  }
  return total + (Scalar(1) - mass) * Scalar(unassigned_rank(instance, i));
}

template <typename Scalar>
Scalar average_rank(const MarketInstance& instance, const RandomMatching<Scalar>& x) {
  if (instance.num_students() == 0) return Scalar(0);
  Scalar total(0);
  for (int i = 0; i < instance.num_students(); ++i) total += expected_rank(instance, x, i);
  return total / Scalar(instance.num_students());
}

enum class SdVerdict {
  kStrictlyDominates,
  kEqual,
  kWeaklyDominatesNotStrictly,
  kIncomparable,
};

const char* to_string(SdVerdict v);

/// One-directional test: does q sd-dominate p? Cumulative sums over each
/// student's preference prefixes are compared with slack `eps`.
///
/// kWeaklyDominatesNotStrictly covers the tolerance band: every prefix is
/// within eps (none strictly better) but the tables themselves differ by more
/// than eps somewhere.
template <typename Scalar>
SdVerdict sd_compare(const MarketInstance& instance, const RandomMatching<Scalar>& q,
                     const RandomMatching<Scalar>& p, double eps = Tolerance<Scalar>::sd) {
  const int n = instance.num_students();
  const int m = instance.num_schools();
  if (q.rows() != n || q.cols() != m || p.rows() != n || p.cols() != m) {
    throw Error("sd_compare: probability table dimensions do not match the instance");
  }
  const Scalar tol = scalar_from_double<Scalar>(eps);
  bool strict = false;
  bool table_differs = false;
  for (int i = 0; i < n; ++i) {
    Scalar cq(0), cp(0);
    for (int s : instance.preferences(i)) {
      cq += q(i, s);
      cp += p(i, s);
      const Scalar diff = cq - cp;
      if (diff < -tol) return SdVerdict::kIncomparable;
      if (diff > tol) strict = true;
      const Scalar entry = q(i, s) - p(i, s);
      if (entry > tol || entry < -tol) table_differs = true;
    }
  }
  if (strict) return SdVerdict::kStrictlyDominates;
  return table_differs ? SdVerdict::kWeaklyDominatesNotStrictly : SdVerdict::kEqual;
}

/// True for kStrictlyDominates, kEqual and kWeaklyDominatesNotStrictly.
inline bool weakly_dominates(SdVerdict v) { return v != SdVerdict::kIncomparable; }

/// Appends a dummy school (capacity |N|, one tie class with everyone) as the
/// last choice of every student.
MarketInstance augment_with_dummy(const MarketInstance& instance);

/// Adds a zero column for the dummy school of `augmented`, and moves any
/// unassigned mass there so every row sums to one.
template <typename Scalar>
RandomMatching<Scalar> lift_to_augmented(const MarketInstance& augmented,
                                         const RandomMatching<Scalar>& x) {
  const int n = augmented.num_students();
  const int m = augmented.num_schools();
  const int dummy = *augmented.dummy_school();
  RandomMatching<Scalar> out = RandomMatching<Scalar>::Zero(n, m);
  for (int i = 0; i < n; ++i) {
    Scalar mass(0);
    for (int s = 0; s < x.cols(); ++s) {
      out(i, s) = x(i, s);
      mass += x(i, s);
    }
    out(i, dummy) += Scalar(1) - mass;
  }
  return out;
}

/// Extends a matching of the original instance: unassigned students go to
/// the dummy school.
Matching lift_to_augmented(const MarketInstance& augmented, const Matching& m);

}  // namespace pirmes
