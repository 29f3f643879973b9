#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "wearaug/window.hpp"

namespace wearaug {

enum Label : int { kBrady = 0, kDysk = 1 };

inline std::string label_name(int label) { return label == kDysk ? "dysk" : "brady"; }

inline int parse_label(const std::string& s) {
  if (s == "brady") return kBrady;
  if (s == "dysk") return kDysk;
  throw InvalidArgument("unknown label '" + s + "' (expected brady or dysk)");
}

struct Record {
  Window window;
  int label = kBrady;
  std::string subject;
};

/// Labeled windows from several subjects.
struct LabeledDataset {
  std::vector<Record> records;
  std::string provenance;

  std::size_t size() const noexcept { return records.size(); }

  /// Distinct subject ids in first-appearance order.
  std::vector<std::string> subjects() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : records) {
      if (seen.insert(r.subject).second) out.push_back(r.subject);
    }
    return out;
  }

  LabeledDataset restricted_to(const std::vector<std::string>& subject_ids) const {
    const std::set<std::string> keep(subject_ids.begin(), subject_ids.end());
    LabeledDataset out{{}, provenance};
    for (const auto& r : records) {
      if (keep.count(r.subject)) out.records.push_back(r);
    }
    return out;
  }

  /// Same length and rate everywhere, >= 2 subjects, both labels present.
  void validate() const {
    if (records.empty()) throw InvalidArgument("dataset: no records");
    bool has[2] = {false, false};
    for (const auto& r : records) {
      if (r.label != kBrady && r.label != kDysk) throw InvalidArgument("dataset: label must be 0 or 1");
      if (r.window.length() != records[0].window.length() || r.window.rate_hz() != records[0].window.rate_hz()) {
        throw InvalidArgument("dataset: windows differ in length or rate");
      }
      has[r.label] = true;
    }
    if (!has[0] || !has[1]) throw InvalidArgument("dataset: both labels must be present");
    if (subjects().size() < 2) throw InvalidArgument("dataset: need at least 2 subjects");
  }
};

}  // namespace wearaug
