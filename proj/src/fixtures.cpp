#include "hierflow/fixtures.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <random>
#include <utility>

namespace hierflow::fixtures {

namespace {

constexpr Day kBase{15340};  // 2012-01-01

const std::vector<HierarchyEdge>& demo_edges() {
  static const std::vector<HierarchyEdge> edges = {
      {"ROOT", "", "All event types"},
      {"E11", "ROOT", "Type 2 diabetes mellitus"},
      {"E11.22", "E11", "Type 2 diabetes with diabetic chronic kidney disease"},
      {"E11.65", "E11", "Type 2 diabetes with hyperglycemia"},
      {"E11.9", "E11", "Type 2 diabetes without complications"},
      {"ENC", "ROOT", "Encounters"},
      {"ENC.ADM", "ENC", "Inpatient admission"},
      {"ENC.DIS", "ENC", "Hospital discharge"},
      {"ENC.ED", "ENC", "Emergency department visit"},
      {"ENC.OFF", "ENC", "Office visit"},
      {"F10-F19", "ROOT", "Disorders due to psychoactive substance use"},
      {"F10", "F10-F19", "Alcohol related disorders"},
      {"F10.1", "F10", "Alcohol abuse"},
      {"F10.2", "F10", "Alcohol dependence"},
      {"F11", "F10-F19", "Opioid related disorders"},
      {"F11.1", "F11", "Opioid abuse"},
      {"F11.2", "F11", "Opioid dependence"},
      {"F11.9", "F11", "Opioid use, unspecified"},
      {"F12", "F10-F19", "Cannabis related disorders"},
      {"F12.1", "F12", "Cannabis abuse"},
      {"F12.9", "F12", "Cannabis use, unspecified"},
      {"F17", "F10-F19", "Nicotine dependence"},
      {"F17.2", "F17", "Nicotine dependence, tobacco products"},
      {"F17.20", "F17.2", "Nicotine dependence, unspecified"},
      {"F17.21", "F17.2", "Nicotine dependence, cigarettes"},
      {"F17.29", "F17.2", "Nicotine dependence, other tobacco product"},
      {"G89", "ROOT", "Pain, not elsewhere classified"},
      {"G89.1", "G89", "Acute pain"},
      {"G89.11", "G89.1", "Acute pain due to trauma"},
      {"G89.18", "G89.1", "Other acute postprocedural pain"},
      {"G89.2", "G89", "Chronic pain"},
      {"G89.21", "G89.2", "Chronic pain due to trauma"},
      {"G89.29", "G89.2", "Other chronic pain"},
      {"G89.4", "G89", "Chronic pain syndrome"},
      {"I10", "ROOT", "Essential hypertension"},
      {"I50", "ROOT", "Heart failure"},
      {"I50.1", "I50", "Left ventricular failure"},
      {"I50.2", "I50", "Systolic heart failure"},
      {"I50.20", "I50.2", "Unspecified systolic heart failure"},
      {"I50.21", "I50.2", "Acute systolic heart failure"},
      {"I50.22", "I50.2", "Chronic systolic heart failure"},
      {"I50.23", "I50.2", "Acute on chronic systolic heart failure"},
      {"I50.3", "I50", "Diastolic heart failure"},
      {"I50.30", "I50.3", "Unspecified diastolic heart failure"},
      {"I50.31", "I50.3", "Acute diastolic heart failure"},
      {"I50.32", "I50.3", "Chronic diastolic heart failure"},
      {"I50.33", "I50.3", "Acute on chronic diastolic heart failure"},
      {"I50.4", "I50", "Combined systolic and diastolic heart failure"},
      {"I50.40", "I50.4", "Unspecified combined heart failure"},
      {"I50.41", "I50.4", "Acute combined heart failure"},
      {"I50.42", "I50.4", "Chronic combined heart failure"},
      {"I50.43", "I50.4", "Acute on chronic combined heart failure"},
      {"J44", "ROOT", "Chronic obstructive pulmonary disease"},
      {"J44.0", "J44", "COPD with acute lower respiratory infection"},
      {"J44.1", "J44", "COPD with acute exacerbation"},
      {"J44.9", "J44", "COPD, unspecified"},
      {"M54", "ROOT", "Dorsalgia"},
      {"M54.2", "M54", "Cervicalgia"},
      {"M54.5", "M54", "Low back pain"},
      {"M54.9", "M54", "Dorsalgia, unspecified"},
      {"N18", "ROOT", "Chronic kidney disease"},
      {"N18.3", "N18", "Chronic kidney disease, stage 3"},
      {"N18.4", "N18", "Chronic kidney disease, stage 4"},
      {"N18.6", "N18", "End stage renal disease"},
      {"PX", "ROOT", "Procedures"},
      {"PX.CARD", "PX", "Heart procedures"},
      {"PX.CARD.ECG", "PX.CARD", "Electrocardiogram"},
      {"PX.CARD.ECG.12L", "PX.CARD.ECG", "Routine 12-lead electrocardiogram"},
      {"PX.CARD.ECG.RHY", "PX.CARD.ECG", "Rhythm strip"},
      {"PX.CARD.ECHO", "PX.CARD", "Echocardiogram"},
      {"PX.IMG", "PX", "Imaging"},
      {"PX.IMG.CT", "PX.IMG", "Computed tomography"},
      {"PX.IMG.MRI", "PX.IMG", "Magnetic resonance imaging"},
      {"PX.IMG.XR", "PX.IMG", "Radiograph"},
      {"PX.LAB", "PX", "Laboratory"},
      {"PX.LAB.BMP", "PX.LAB", "Basic metabolic panel"},
      {"PX.LAB.CBC", "PX.LAB", "Complete blood count"},
      {"PX.LAB.LIP", "PX.LAB", "Lipid panel"},
      {"Z79", "ROOT", "Long term drug therapy"},
      {"Z79.4", "Z79", "Long term use of insulin"},
      {"Z79.891", "Z79", "Long term use of opiate analgesic"},
  };
  return edges;
}

class Builder {
 public:
  Builder(const TypeHierarchy& types, std::uint64_t seed) : types_(types), rng_(seed) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(uniform(0, static_cast<int>(items.size()) - 1))];
  }
  std::mt19937_64& rng() { return rng_; }

  void add(EntityRecord& e, std::string_view code, Day day) {
    e.events.push_back({types_.id(code), day});
  }
  void add_random(EntityRecord& e, const std::vector<std::string>& codes, Day first, Day last) {
    add(e, pick(codes), first + uniform(0, last - first));
  }
  EntityRecord entity(const char* prefix, std::size_t index) {
    EntityRecord e;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%05zu", prefix, index);
    e.id = buf;
    e.attributes = {static_cast<double>(uniform(20, 89)), std::string(chance(0.5) ? "F" : "M")};
    return e;
  }

  // `total` indexes out of `within`, exactly `positives` of them flagged.
  std::vector<bool> choose(const std::vector<bool>& within, const std::vector<bool>& flagged,
                           std::size_t total, std::size_t positives) {
    const std::size_t n = within.size();
    std::vector<std::size_t> yes, no;
    for (std::size_t i = 0; i < n; ++i) {
      if (within[i]) (flagged[i] ? yes : no).push_back(i);
    }
    std::shuffle(yes.begin(), yes.end(), rng_);
    std::shuffle(no.begin(), no.end(), rng_);
    std::vector<bool> out(n, false);
    for (std::size_t k = 0; k < positives; ++k) out[yes[k]] = true;
    for (std::size_t k = 0; k < total - positives; ++k) out[no[k]] = true;
    return out;
  }

 private:
  const TypeHierarchy& types_;
  std::mt19937_64 rng_;
};

std::vector<AttributeColumn> demo_attributes() {
  return {{"age", AttributeKind::Numeric}, {"sex", AttributeKind::Categorical}};
}

}  // namespace

TypeHierarchy demo_hierarchy() { return build_hierarchy(demo_edges()); }

DatasetHandle heart_failure_dataset(std::uint64_t seed) {
  auto types = std::make_shared<const TypeHierarchy>(demo_hierarchy());
  Builder b(*types, seed);
  const std::vector<std::string> diabetes{"E11.22", "E11.65", "E11.9"};
  const std::vector<std::string> filler{"I10", "ENC.OFF", "PX.LAB.BMP", "PX.LAB.CBC",
                                        "PX.LAB.LIP", "Z79.4", "J44.9"};
  const std::vector<std::string> ckd{"N18.3", "N18.4", "N18.6"};

  std::vector<EntityRecord> entities;
  std::vector<Day> start(kHeartFailureEntities);
  for (std::size_t i = 0; i < kHeartFailureEntities; ++i) {
    EntityRecord e = b.entity("D", i);
    start[i] = kBase + b.uniform(0, 1459);
    b.add(e, b.pick(diabetes), start[i]);
    for (int k = b.uniform(0, 5); k > 0; --k) b.add_random(e, diabetes, start[i], start[i] + 1094);
    for (int k = b.uniform(0, 6); k > 0; --k) b.add_random(e, filler, start[i], start[i] + 1094);
    entities.push_back(std::move(e));
  }

  std::vector<std::size_t> order(kHeartFailureEntities);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), b.rng());
  const std::vector<std::size_t> carriers(order.begin(), order.begin() + kHeartFailureCarriers);

  // Exact per-code totals; I50 itself plus 13 specific codes.
  const std::vector<std::pair<std::string, std::size_t>> counts = {
      {"I50", kHeartFailureGeneric}, {"I50.1", 312},   {"I50.20", 1480}, {"I50.21", 862},
      {"I50.22", 1926},              {"I50.23", 1204}, {"I50.30", 1118}, {"I50.31", 702},
      {"I50.32", 1644},              {"I50.33", 980},  {"I50.40", 402},  {"I50.41", 213},
      {"I50.42", 1873},              {"I50.43", 2698}};
  std::vector<std::string> codes;
  for (const auto& [code, n] : counts) codes.insert(codes.end(), n, code);
  std::shuffle(codes.begin(), codes.end(), b.rng());

  std::vector<std::size_t> per_carrier(carriers.size(), 1);
  for (std::size_t r = carriers.size(); r < codes.size(); ++r) {
    ++per_carrier[static_cast<std::size_t>(b.uniform(0, static_cast<int>(carriers.size()) - 1))];
  }
  std::vector<bool> is_carrier(kHeartFailureEntities, false);
  std::size_t next = 0;
  for (std::size_t c = 0; c < carriers.size(); ++c) {
    const std::size_t i = carriers[c];
    is_carrier[i] = true;
    for (std::size_t k = 0; k < per_carrier[c]; ++k) {
      b.add(entities[i], codes[next++], start[i] + b.uniform(1, 1094));
    }
  }

  for (std::size_t i = 0; i < kHeartFailureEntities; ++i) {
    if (b.chance(is_carrier[i] ? 0.30 : 0.12)) {
      b.add(entities[i], b.pick(ckd), start[i] + b.uniform(30, 1200));
    }
  }
  return make_dataset(types, demo_attributes(), std::move(entities), "heart-failure");
}

QuerySpec heart_failure_query() {
  QuerySpec q;
  q.inclusion = {std::string(kRootCode)};
  q.outcome = {"N18"};
  return q;
}

DatasetHandle use_case_dataset(std::uint64_t seed) {
  auto types = std::make_shared<const TypeHierarchy>(demo_hierarchy());
  Builder b(*types, seed);
  const std::vector<std::string> filler{"E11.9", "E11.65", "I10",        "J44.1",
                                        "J44.9", "M54.2", "M54.5",       "M54.9",
                                        "ENC.OFF", "ENC.ED", "PX.LAB.BMP", "PX.LAB.CBC",
                                        "PX.LAB.LIP", "PX.IMG.XR", "PX.IMG.CT", "Z79.4",
                                        "Z79.891", "N18.3", "I50.32", "PX.IMG.MRI"};
  const std::vector<std::string> inpatient{"PX.LAB.BMP", "PX.LAB.CBC", "PX.IMG.XR", "PX.IMG.CT",
                                           "PX.IMG.MRI"};
  const std::vector<std::string> pain{"G89.11", "G89.18", "G89.21", "G89.29", "G89.4"};
  const std::vector<std::string> nicotine{"F17.20", "F17.21", "F17.29"};
  const std::vector<std::string> rare_substance{"F10.1", "F10.2", "F12.1", "F12.9"};
  const std::vector<std::string> lookback_substance{"F10.1", "F10.2", "F12.9", "F17.20",
                                                    "F17.21", "F17.29"};
  const std::vector<std::string> opioid{"F11.1", "F11.2", "F11.9"};
  const std::vector<std::string> ecg{"PX.CARD.ECG.12L", "PX.CARD.ECG.RHY"};

  const std::size_t m = kUseCaseMembers;
  std::vector<bool> all(m, true), none(m, false);
  const std::vector<bool> positive = b.choose(all, none, kUseCasePositives, 0);
  const std::vector<bool> substance = b.choose(all, positive, kUseCaseSubstanceInWindow, 48);
  const std::vector<bool> rare = b.choose(substance, positive, 40, 15);
  const std::vector<bool> lookback = b.choose(all, positive, kUseCaseSubstanceLookback, 22);
  const std::vector<bool> heart = b.choose(all, positive, kUseCaseHeartProcedures, 40);
  std::vector<bool> echo_only(m, false);
  {
    std::vector<std::size_t> h;
    for (std::size_t i = 0; i < m; ++i) {
      if (heart[i]) h.push_back(i);
    }
    std::shuffle(h.begin(), h.end(), b.rng());
    for (std::size_t k = 0; k < kUseCaseHeartProcedures - kUseCaseEcg; ++k) echo_only[h[k]] = true;
  }

  std::vector<EntityRecord> entities;
  for (std::size_t i = 0; i < m; ++i) {
    EntityRecord e = b.entity("U", i);
    const Day p = kBase + b.uniform(400, 1399);
    const Day d = p + b.uniform(1, 20);
    for (int k = b.uniform(1, 4); k > 0; --k) b.add_random(e, filler, p - 900, p - 366);
    for (int k = b.uniform(4, 20); k > 0; --k) b.add_random(e, filler, p - 365, p - 1);
    if (lookback[i]) b.add_random(e, lookback_substance, p - 365, p - 1);
    b.add(e, b.pick(pain), p);
    b.add(e, "ENC.ADM", p);
    for (int k = b.uniform(1, 6); k > 0; --k) b.add_random(e, inpatient, p + 1, d);
    if (substance[i]) {
      b.add_random(e, nicotine, p + 1, d);
      // Rare substances only among nicotine carriers keep the group at 360.
      if (rare[i]) b.add_random(e, rare_substance, p + 1, d);
    }
    if (heart[i]) {
      if (echo_only[i]) {
        b.add(e, "PX.CARD.ECHO", p + b.uniform(1, d - p));
      } else {
        b.add_random(e, ecg, p + 1, d);
        if (b.chance(0.2)) b.add(e, "PX.CARD.ECHO", p + b.uniform(1, d - p));
      }
    }
    b.add(e, "ENC.DIS", d);
    for (int k = b.uniform(0, 8); k > 0; --k) b.add_random(e, filler, d + 1, d + 400);
    if (positive[i]) b.add_random(e, opioid, d + 1, d + 365);
    entities.push_back(std::move(e));
  }

  // Non-members: pain without a later discharge, discharge without pain, or
  // neither.
  for (std::size_t i = m; i < kUseCaseEntities; ++i) {
    EntityRecord e = b.entity("U", i);
    const Day p = kBase + b.uniform(400, 1399);
    for (int k = b.uniform(1, 12); k > 0; --k) b.add_random(e, filler, p - 365, p + 365);
    const std::size_t kind = (i - m) % 3;
    if (kind == 0) {
      b.add(e, b.pick(pain), p);
      if (b.chance(0.5)) b.add(e, "ENC.DIS", p - b.uniform(1, 200));
    } else if (kind == 1) {
      b.add(e, "ENC.DIS", p);
    }
    if (b.chance(0.1)) b.add_random(e, opioid, p - 100, p + 300);
    if (b.chance(0.2)) b.add_random(e, lookback_substance, p - 100, p + 300);
    entities.push_back(std::move(e));
  }
  return make_dataset(types, demo_attributes(), std::move(entities), "use-case");
}

QuerySpec use_case_query() {
  QuerySpec q;
  q.inclusion = {"G89", "ENC.DIS"};
  q.lookback_days = 365;
  q.outcome = {"F11"};
  return q;
}

}  // namespace hierflow::fixtures
