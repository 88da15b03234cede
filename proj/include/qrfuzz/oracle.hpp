// Copyright 2026 The qrfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Finding oracles: cache differential vectors with bisecting k-means
// triage, rule-based sub-clustering, per-metric resource outliers, and
// crash detection over normalized traces.

#ifndef QRFUZZ_ORACLE_HPP_
#define QRFUZZ_ORACLE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "qrfuzz/trace.hpp"

namespace qrfuzz::oracle {

class OracleError : public std::runtime_error {
 public:
  enum class Kind { kDegenerateK, kInsufficientData };
  OracleError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Cache records compare on (NAME, TYPE, RDATA); duplicates collapse.
using CacheKey = std::tuple<std::string, std::uint16_t, std::string>;
std::set<CacheKey> cache_key_set(const trace::UnifiedCache& cache);

// values[i] = max over j != i of |R_i \ R_j|: how many records resolver i
// holds that some other resolver lacks. A single cache yields {0}.
std::vector<std::size_t> cache_diff_vector(
    const std::vector<trace::UnifiedCache>& caches);

// --- bisecting k-means over difference vectors ---

using Point = std::vector<double>;

struct Clustering {
  std::vector<std::size_t> assignment;  // point index -> cluster in [0, k)
  std::vector<Point> centroids;
  double sse = 0;
};

// Splits the largest-SSE cluster with seeded 2-means (best of 10 restarts)
// until k clusters exist. Throws kDegenerateK when k exceeds the number of
// distinct points. Deterministic in (points, k, seed).
Clustering bisecting_kmeans(const std::vector<Point>& points, std::size_t k,
                            std::uint64_t seed);

// Total SSE for k = 1..max_k from one run of the split sequence; once no
// cluster can split further the terminal SSE repeats. Never throws; a
// shorter prefix of the same call is a prefix of the longer curve.
std::vector<double> sse_curve(const std::vector<Point>& points,
                              std::size_t max_k, std::uint64_t seed);

// 1-based k with the largest relative SSE drop from its predecessor,
// (sse[k-2] - sse[k-1]) / sse[k-2]; 1 when no positive drop exists.
std::size_t elbow_k(const std::vector<double>& sse);

// --- rule-based sub-clustering ---

// A case matches when any of its records satisfies every set constraint.
struct MatchRule {
  std::string label;
  std::string name_pattern;            // regex, "" = any
  std::optional<std::uint16_t> type;   // exact type code
  std::string rdata_pattern;           // regex, "" = any
  std::string zone_suffix;             // record name under-or-equal, "" = any
};

struct CaseFeatures {
  std::uint64_t case_id = 0;
  trace::UnifiedCache records;
};

// First matching rule wins; unmatched cases land under "unclassified".
std::map<std::string, std::vector<std::uint64_t>> subcluster_by_rules(
    const std::vector<CaseFeatures>& cases,
    const std::vector<MatchRule>& rules);

// --- resource consumption ---

struct ResourceFlags {
  double threshold_value = 0;          // the ceil(theta*N)-th smallest value
  std::vector<std::size_t> flagged;    // indices with value strictly above
};

// Nearest-rank quantile with strict exceedance: a case is abnormal when
// its value is higher than the theta-quantile of all values. Throws
// kInsufficientData when fewer than 10 values are given.
ResourceFlags resource_flags(const std::vector<double>& values, double theta);

// --- crashes ---

// Case ids whose trace reports the resolver not alive, de-duplicated and
// sorted ascending.
std::vector<std::uint64_t> crash_findings(
    const std::vector<trace::TraceRecord>& traces);

}  // namespace qrfuzz::oracle

#endif  // QRFUZZ_ORACLE_HPP_
