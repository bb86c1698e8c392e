#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "pirmes/instance_gen.hpp"
#include "pirmes/io.hpp"
#include "support.hpp"

using namespace pirmes;
using namespace testing_support;

namespace {

// Class index per student at one school, for refinement checks.
std::vector<int> classes_at(const MarketInstance& inst, int s) {
  std::vector<int> out(inst.num_students(), -1);
  const auto& groups = inst.priority_classes(s);
  for (std::size_t c = 0; c < groups.size(); ++c) {
    for (int i : groups[c]) out[i] = static_cast<int>(c);
  }
  return out;
}

// Finer refines coarser: equal class in finer implies equal class in coarser,
// and strict order in coarser is kept in finer.
bool refines(const std::vector<int>& finer, const std::vector<int>& coarser) {
  for (std::size_t a = 0; a < finer.size(); ++a) {
    for (std::size_t b = 0; b < finer.size(); ++b) {
      if (finer[a] < 0 || finer[b] < 0) continue;
      if (finer[a] == finer[b] && coarser[a] != coarser[b]) return false;
      if (coarser[a] < coarser[b] && !(finer[a] < finer[b])) return false;
    }
  }
  return true;
}

std::vector<SchoolRecord> one_school() { return {{"s", 2}, {"t", 1}, {"u", 1}, {"v", 1}}; }

}  // namespace

TEST(Generate, CommonQualityGivesIdenticalLists) {
  GenConfig c{12, 4, 1.0, 0.0, 3};
  const auto inst = generate(c);
  for (int i = 1; i < inst.num_students(); ++i) {
    EXPECT_TRUE(std::equal(inst.preferences(i).begin(), inst.preferences(i).end(), inst.preferences(0).begin()));
  }
}

TEST(Generate, PureDistanceRanksWalkZoneFirst) {
  GenConfig c{30, 6, 0.3, 1.0, 4};
  const auto g = generate_with_metadata(c);
  for (int i = 0; i < g.instance.num_students(); ++i) EXPECT_EQ(g.instance.preferences(i)[0], g.walk_zone[i]);
}

TEST(Generate, ShapeAndPriorities) {
  GenConfig c{43, 8, 0.4, 0.2, 5};
  const auto g = generate_with_metadata(c);
  const auto& inst = g.instance;
  int total = 0;
  for (int s = 0; s < 8; ++s) {
    total += inst.capacity(s);
    EXPECT_GE(inst.capacity(s), 5);
    EXPECT_LE(inst.capacity(s), 6);
    const auto& cls = inst.priority_classes(s);
    EXPECT_LE(cls.size(), 2u);
    const bool zone_empty = std::count(g.walk_zone.begin(), g.walk_zone.end(), s) == 0;
    for (int i = 0; i < inst.num_students(); ++i) {
      EXPECT_EQ(inst.priority_class(i, s), g.walk_zone[i] == s || zone_empty ? 1 : 2);
    }
  }
  EXPECT_EQ(total, 43);
  for (int i = 0; i < inst.num_students(); ++i) EXPECT_EQ(inst.preferences(i).size(), 8u);
  EXPECT_TRUE(validate(inst).empty());
}

TEST(Generate, DeterministicPerSeed) {
  GenConfig c{40, 8, 0.4, 0.2, 99};
  EXPECT_EQ(io::serialize_instance(generate(c)), io::serialize_instance(generate(c)));
  GenConfig d = c;
  d.seed = 100;
  EXPECT_NE(io::serialize_instance(generate(c)), io::serialize_instance(generate(d)));
}

TEST(Generate, RejectsBadParameters) {
  EXPECT_THROW(generate(GenConfig{10, 2, 1.5, 0.2, 0}), Error);
  EXPECT_THROW(generate(GenConfig{10, 0, 0.5, 0.2, 0}), Error);
}

TEST(Estonian, SiblingAndDistanceRules) {
  // a and b list s first, c lists s fourth; a has a sibling at s.
  const std::vector<RawRecord> records{{"a", {"s", "t"}, {"s"}, {}},
                                       {"b", {"s"}, {}, {}},
                                       {"c", {"t", "u", "v", "s"}, {}, {}}};
  auto ids = [](const MarketInstance& inst) {
    std::vector<std::vector<std::string>> out;
    for (const auto& g : inst.priority_classes(*inst.find_school("s"))) {
      std::vector<std::string> row;
      for (int i : g) row.push_back(inst.student_id(i));
      out.push_back(row);
    }
    return out;
  };
  using V = std::vector<std::vector<std::string>>;
  EXPECT_EQ(ids(estonian_priorities(records, one_school(), SiblingRule::kSib, DistanceRule::kDist3)),
            (V{{"a"}, {"b"}, {"c"}}));
  EXPECT_EQ(ids(estonian_priorities(records, one_school(), SiblingRule::kNoSib, DistanceRule::kRelDist)),
            (V{{"a", "b"}, {"c"}}));
  EXPECT_EQ(ids(estonian_priorities(records, one_school(), SiblingRule::kNoSib, DistanceRule::kDist3)),
            (V{{"a", "b"}, {"c"}}));
  const std::vector<RawRecord> same{{"x", {"s"}, {}, {}}, {"y", {"s"}, {}, {}}};
  EXPECT_EQ(ids(estonian_priorities(same, one_school(), SiblingRule::kNoSib, DistanceRule::kRelDist)),
            (V{{"x", "y"}}));
}

TEST(Estonian, RefinementOrderAcrossRules) {
  Rng rng(81);
  const std::vector<std::string> names{"s1", "s2", "s3", "s4", "s5", "s6"};
  std::vector<SchoolRecord> schools;
  for (const auto& s : names) schools.push_back({s, 3});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RawRecord> records;
    for (int f = 0; f < 15; ++f) {
      std::vector<std::string> order = names;
      rng.shuffle(std::span<std::string>(order));
      order.resize(1 + rng.below(6));
      std::vector<std::string> sib;
      if (rng.uniform() < 0.3) sib.push_back(names[rng.below(6)]);
      records.push_back({"f" + std::to_string(f), order, sib, {}});
    }
    const auto sr = estonian_priorities(records, schools, SiblingRule::kSib, DistanceRule::kRelDist);
    const auto sd = estonian_priorities(records, schools, SiblingRule::kSib, DistanceRule::kDist3);
    const auto nr = estonian_priorities(records, schools, SiblingRule::kNoSib, DistanceRule::kRelDist);
    const auto nd = estonian_priorities(records, schools, SiblingRule::kNoSib, DistanceRule::kDist3);
    for (int s = 0; s < 6; ++s) {
      EXPECT_TRUE(refines(classes_at(sr, s), classes_at(sd, s)));
      EXPECT_TRUE(refines(classes_at(nr, s), classes_at(nd, s)));
      // Away from siblings the two sibling rules order students identically.
      for (auto [with, without] : {std::pair{&sr, &nr}, std::pair{&sd, &nd}}) {
        const auto a = classes_at(*with, s), b = classes_at(*without, s);
        for (int x = 0; x < 15; ++x) {
          for (int y = 0; y < 15; ++y) {
            const bool sib = std::find(records[x].siblings.begin(), records[x].siblings.end(), names[s]) !=
                                 records[x].siblings.end() ||
                             std::find(records[y].siblings.begin(), records[y].siblings.end(), names[s]) !=
                                 records[y].siblings.end();
            if (sib || a[x] < 0 || a[y] < 0) continue;
            EXPECT_EQ(a[x] < a[y], b[x] < b[y]);
            EXPECT_EQ(a[x] == a[y], b[x] == b[y]);
          }
        }
      }
    }
  }
}

TEST(Estonian, MalformedRecords) {
  EXPECT_THROW(estonian_priorities({{"a", {}, {}, {}}}, one_school(), SiblingRule::kSib, DistanceRule::kDist3), Error);
  EXPECT_THROW(estonian_priorities({{"a", {"s", "s"}, {}, {}}}, one_school(), SiblingRule::kSib, DistanceRule::kDist3),
               Error);
  EXPECT_THROW(estonian_priorities({{"a", {"zz"}, {}, {}}}, one_school(), SiblingRule::kSib, DistanceRule::kDist3),
               Error);
}

TEST(Estonian, CsvParsing) {
  std::istringstream rec("family,choice_1,choice_2,choice_3,sibling_school_ids,distances\n"
                         "a,s,t,,s,0.5;1.2\n"
                         "b,t,,,,\n");
  const auto records = parse_records_csv(rec);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].choices, (std::vector<std::string>{"s", "t"}));
  EXPECT_EQ(records[0].siblings, (std::vector<std::string>{"s"}));
  EXPECT_EQ(records[0].distances, (std::vector<double>{0.5, 1.2}));
  EXPECT_EQ(records[1].choices, (std::vector<std::string>{"t"}));
  std::istringstream sch("id,capacity\ns,2\nt,1\n");
  const auto schools = parse_schools_csv(sch);
  ASSERT_EQ(schools.size(), 2u);
  EXPECT_EQ(schools[0].capacity, 2);
  std::istringstream bad("id,capacity\ns,two\n");
  EXPECT_THROW(parse_schools_csv(bad), Error);
  std::istringstream nofamily("choice_1\ns\n");
  EXPECT_THROW(parse_records_csv(nofamily), Error);
}
