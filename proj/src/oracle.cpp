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

#include "qrfuzz/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <regex>

#include "qrfuzz/common.hpp"
#include "qrfuzz/dns.hpp"

namespace qrfuzz::oracle {

std::set<CacheKey> cache_key_set(const trace::UnifiedCache& cache) {
  std::set<CacheKey> keys;
  for (const auto& r : cache) {
    keys.emplace(r.name, r.type, r.rdata);
  }
  return keys;
}

std::vector<std::size_t> cache_diff_vector(
    const std::vector<trace::UnifiedCache>& caches) {
  std::vector<std::set<CacheKey>> sets;
  sets.reserve(caches.size());
  for (const auto& c : caches) sets.push_back(cache_key_set(c));

  std::vector<std::size_t> values(caches.size(), 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
      if (j == i) continue;
      std::size_t missing = 0;
      for (const auto& key : sets[i]) {
        if (sets[j].count(key) == 0) ++missing;
      }
      values[i] = std::max(values[i], missing);
    }
  }
  return values;
}

namespace {

struct Cluster {
  std::vector<std::size_t> members;
  Point centroid;
  double sse = 0;
};

double squared_distance(const Point& a, const Point& b) {
  double total = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double delta = a[d] - b[d];
    total += delta * delta;
  }
  return total;
}

Point mean_of(const std::vector<Point>& points,
              const std::vector<std::size_t>& members) {
  Point mu(points[members.front()].size(), 0.0);
  for (auto idx : members) {
    for (std::size_t d = 0; d < mu.size(); ++d) mu[d] += points[idx][d];
  }
  for (auto& v : mu) v /= static_cast<double>(members.size());
  return mu;
}

double sse_of(const std::vector<Point>& points,
              const std::vector<std::size_t>& members, const Point& mu) {
  double total = 0;
  for (auto idx : members) total += squared_distance(points[idx], mu);
  return total;
}

Cluster make_cluster(const std::vector<Point>& points,
                     std::vector<std::size_t> members) {
  Cluster c;
  c.members = std::move(members);
  c.centroid = mean_of(points, c.members);
  c.sse = sse_of(points, c.members, c.centroid);
  return c;
}

bool has_two_distinct(const std::vector<Point>& points,
                      const std::vector<std::size_t>& members) {
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (points[members[i]] != points[members.front()]) return true;
  }
  return false;
}

// One seeded 2-means pass over a cluster's members: two distinct member
// points as initial centers, then Lloyd iterations with an empty-side
// rescue that moves the empty center onto the farthest point.
std::pair<Cluster, Cluster> two_means_once(
    const std::vector<Point>& points, const std::vector<std::size_t>& members,
    Rng& rng) {
  Point a = points[members[rng.below(members.size())]];
  Point b = a;
  for (int attempt = 0; attempt < 32 && b == a; ++attempt) {
    b = points[members[rng.below(members.size())]];
  }
  if (b == a) {
    for (auto idx : members) {
      if (points[idx] != a) {
        b = points[idx];
        break;
      }
    }
  }

  std::vector<bool> side(members.size(), false);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    std::size_t count_b = 0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      bool to_b = squared_distance(points[members[i]], b) <
                  squared_distance(points[members[i]], a);
      if (to_b != side[i]) changed = true;
      side[i] = to_b;
      if (to_b) ++count_b;
    }
    if (count_b == 0 || count_b == members.size()) {
      // Rescue: pull the empty side onto the farthest point.
      std::size_t far = 0;
      double best = -1;
      const Point& full = count_b == 0 ? a : b;
      for (std::size_t i = 0; i < members.size(); ++i) {
        double d = squared_distance(points[members[i]], full);
        if (d > best) {
          best = d;
          far = i;
        }
      }
      side.assign(members.size(), count_b != 0);
      side[far] = count_b == 0;
      changed = true;
    }
    std::vector<std::size_t> part_a;
    std::vector<std::size_t> part_b;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (side[i] ? part_b : part_a).push_back(members[i]);
    }
    a = mean_of(points, part_a);
    b = mean_of(points, part_b);
    if (!changed) break;
  }

  std::vector<std::size_t> part_a;
  std::vector<std::size_t> part_b;
  for (std::size_t i = 0; i < members.size(); ++i) {
    (side[i] ? part_b : part_a).push_back(members[i]);
  }
  return {make_cluster(points, part_a), make_cluster(points, part_b)};
}

std::pair<Cluster, Cluster> split_cluster(const std::vector<Point>& points,
                                          const Cluster& cluster, Rng& rng) {
  std::pair<Cluster, Cluster> best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < 10; ++restart) {
    auto candidate = two_means_once(points, cluster.members, rng);
    double total = candidate.first.sse + candidate.second.sse;
    if (total < best_sse) {
      best_sse = total;
      best = std::move(candidate);
    }
  }
  return best;
}

std::size_t count_distinct(const std::vector<Point>& points) {
  std::vector<Point> sorted = points;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(
      std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

// Runs the shared split sequence. Splitting stops when `k` clusters exist
// or nothing is splittable; `on_step` sees the total SSE after each state
// (k = 1 first).
std::vector<Cluster> run_bisecting(
    const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
    const std::function<void(double)>& on_step) {
  std::vector<Cluster> clusters;
  if (!points.empty()) {
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    clusters.push_back(make_cluster(points, all));
  }
  Rng rng(seed);
  double total = clusters.empty() ? 0.0 : clusters.front().sse;
  if (on_step) on_step(total);
  while (clusters.size() < k) {
    std::size_t target = clusters.size();
    double worst = -1;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].sse > worst &&
          has_two_distinct(points, clusters[i].members)) {
        worst = clusters[i].sse;
        target = i;
      }
    }
    if (target == clusters.size()) break;  // nothing splittable
    auto parts = split_cluster(points, clusters[target], rng);
    total -= clusters[target].sse;
    total += parts.first.sse + parts.second.sse;
    clusters[target] = std::move(parts.first);
    clusters.push_back(std::move(parts.second));
    if (on_step) on_step(total);
  }
  return clusters;
}

}  // namespace

Clustering bisecting_kmeans(const std::vector<Point>& points, std::size_t k,
                            std::uint64_t seed) {
  if (k == 0 || k > count_distinct(points)) {
    throw OracleError(OracleError::Kind::kDegenerateK,
                      "cannot form " + std::to_string(k) + " clusters from " +
                          std::to_string(count_distinct(points)) +
                          " distinct points");
  }
  auto clusters = run_bisecting(points, k, seed, nullptr);
  Clustering out;
  out.assignment.resize(points.size(), 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    out.centroids.push_back(clusters[c].centroid);
    out.sse += clusters[c].sse;
    for (auto idx : clusters[c].members) out.assignment[idx] = c;
  }
  return out;
}

std::vector<double> sse_curve(const std::vector<Point>& points,
                              std::size_t max_k, std::uint64_t seed) {
  std::vector<double> curve;
  run_bisecting(points, max_k, seed,
                [&](double total) { curve.push_back(total); });
  while (curve.size() < max_k) {
    curve.push_back(curve.empty() ? 0.0 : curve.back());
  }
  curve.resize(max_k);
  return curve;
}

std::size_t elbow_k(const std::vector<double>& sse) {
  std::size_t best_k = 1;
  double best_drop = 0;
  for (std::size_t k = 2; k <= sse.size(); ++k) {
    double prev = sse[k - 2];
    if (prev <= 0) continue;
    double drop = (prev - sse[k - 1]) / prev;
    if (drop > best_drop) {
      best_drop = drop;
      best_k = k;
    }
  }
  return best_k;
}

namespace {

bool record_matches(const trace::UnifiedRecord& r, const MatchRule& rule,
                    const std::optional<std::regex>& name_re,
                    const std::optional<std::regex>& rdata_re,
                    const std::optional<dns::DnsName>& zone) {
  if (rule.type && r.type != *rule.type) return false;
  if (name_re && !std::regex_search(r.name, *name_re)) return false;
  if (rdata_re && !std::regex_search(r.rdata, *rdata_re)) return false;
  if (zone) {
    try {
      if (!dns::DnsName::from_text(r.name).under_or_equal(*zone)) {
        return false;
      }
    } catch (const std::exception&) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::map<std::string, std::vector<std::uint64_t>> subcluster_by_rules(
    const std::vector<CaseFeatures>& cases,
    const std::vector<MatchRule>& rules) {
  std::vector<std::optional<std::regex>> name_res;
  std::vector<std::optional<std::regex>> rdata_res;
  std::vector<std::optional<dns::DnsName>> zones;
  std::map<std::string, std::vector<std::uint64_t>> groups;
  groups["unclassified"];
  for (const auto& rule : rules) {
    name_res.push_back(rule.name_pattern.empty()
                           ? std::nullopt
                           : std::optional<std::regex>(rule.name_pattern));
    rdata_res.push_back(rule.rdata_pattern.empty()
                            ? std::nullopt
                            : std::optional<std::regex>(rule.rdata_pattern));
    zones.push_back(rule.zone_suffix.empty()
                        ? std::nullopt
                        : std::optional<dns::DnsName>(
                              dns::DnsName::from_text(rule.zone_suffix)));
    groups[rule.label];
  }

  for (const auto& c : cases) {
    const std::string* label = nullptr;
    for (std::size_t ri = 0; ri < rules.size() && !label; ++ri) {
      for (const auto& r : c.records) {
        if (record_matches(r, rules[ri], name_res[ri], rdata_res[ri],
                           zones[ri])) {
          label = &rules[ri].label;
          break;
        }
      }
    }
    groups[label ? *label : "unclassified"].push_back(c.case_id);
  }
  return groups;
}

ResourceFlags resource_flags(const std::vector<double>& values, double theta) {
  if (values.size() < 10) {
    throw OracleError(OracleError::Kind::kInsufficientData,
                      "need at least 10 samples, got " +
                          std::to_string(values.size()));
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double raw_rank = theta * static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(raw_rank - 1e-9));
  rank = std::min(std::max<std::size_t>(rank, 1), sorted.size());

  ResourceFlags out;
  out.threshold_value = sorted[rank - 1];
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > out.threshold_value) out.flagged.push_back(i);
  }
  return out;
}

std::vector<std::uint64_t> crash_findings(
    const std::vector<trace::TraceRecord>& traces) {
  std::vector<std::uint64_t> ids;
  for (const auto& t : traces) {
    if (!t.alive) ids.push_back(t.case_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace qrfuzz::oracle
