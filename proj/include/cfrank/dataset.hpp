#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cfrank/common.hpp"

namespace cfrank {

// (external user id, external item id) as read from disk, duplicates kept.
using RawPair = std::pair<std::string, std::string>;

enum class InteractionFormat { edge_list, adjacency_list };

struct LoadOptions {
  // Field separator; empty means any run of whitespace.
  std::string delimiter;
  // When set, requires a numeric third column and keeps only rows with
  // value >= min_rating (edge_list only).
  std::optional<double> min_rating;
};

// Immutable training/evaluation universe with dense ids.
struct InteractionDataset {
  index_t num_users = 0;
  index_t num_items = 0;
  std::vector<std::pair<index_t, index_t>> train_pairs;
  std::vector<std::pair<index_t, index_t>> valid_pairs;
  std::vector<std::pair<index_t, index_t>> test_pairs;
  // Sorted training items per user; exactly the projection of train_pairs.
  std::vector<std::vector<index_t>> user_train_items;
  // Dense index -> external id (line order = dense id).
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

// Bipartite user-item graph in CSR form, one edge per training pair, with
// symmetric normalization weights 1/sqrt(deg(u)*deg(i)). item_rows is the
// exact transpose of user_rows.
struct NormalizedAdjacency {
  index_t num_users = 0;
  index_t num_items = 0;
  std::vector<std::int64_t> user_ptr;
  std::vector<index_t> user_adj;
  std::vector<double> user_weight;
  std::vector<std::int64_t> item_ptr;
  std::vector<index_t> item_adj;
  std::vector<double> item_weight;
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, const std::string& delim) {
  std::vector<std::string> out;
  if (delim.empty()) {
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
  }
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t next = line.find(delim, pos);
    if (next == std::string::npos) next = line.size();
    std::string tok = line.substr(pos, next - pos);
    // Trim surrounding whitespace inside delimited fields.
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
    std::size_t b = tok.find_first_not_of(" \t");
    if (b != std::string::npos) out.push_back(tok.substr(b));
    else if (!tok.empty() || next < line.size()) out.push_back("");
    if (next == line.size()) break;
    pos = next + delim.size();
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

[[noreturn]] inline void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                                    const std::string& msg) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace detail

// Reads raw interactions. edge_list: "<user> <item> [ignored...]" per line;
// adjacency_list: "<user> <item1> <item2> ...". Lines whose first
// non-whitespace character is '#' and blank lines are skipped.
inline std::vector<RawPair> load_interactions(const std::filesystem::path& path,
                                              InteractionFormat format,
                                              const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open interaction file: " + path.string());
  if (opts.min_rating && format != InteractionFormat::edge_list)
    throw std::runtime_error("min_rating filter requires edge_list format");

  std::vector<RawPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;

    std::vector<std::string> fields = detail::split_fields(line, opts.delimiter);
    if (fields.empty()) continue;
    if (format == InteractionFormat::edge_list) {
      if (fields.size() < 2) detail::parse_fail(path, line_no, "expected <user> <item>");
      if (opts.min_rating) {
        if (fields.size() < 3)
          detail::parse_fail(path, line_no, "min_rating filter needs a third column");
        char* end = nullptr;
        double r = std::strtod(fields[2].c_str(), &end);
        if (end == fields[2].c_str() || *end != '\0')
          detail::parse_fail(path, line_no, "rating column is not numeric: " + fields[2]);
        if (r < *opts.min_rating) continue;
      }
      pairs.emplace_back(fields[0], fields[1]);
    } else {
      for (std::size_t k = 1; k < fields.size(); ++k) pairs.emplace_back(fields[0], fields[k]);
    }
  }
  if (pairs.empty()) throw std::runtime_error("empty dataset: " + path.string());
  return pairs;
}

struct SplitFractions {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Assigns dense ids in first-appearance order, collapses duplicate pairs,
// and splits each user's items with a per-user seeded shuffle. valid/test
// sizes are round(frac*n); train takes the remainder. Users with fewer than
// 3 distinct items go entirely to train.
inline InteractionDataset build_dataset(const std::vector<RawPair>& pairs,
                                        const SplitFractions& split, std::uint64_t seed) {
  require(!pairs.empty(), "build_dataset: empty pair list");
  require(split.train > 0 && split.valid > 0 && split.test > 0,
          "build_dataset: split fractions must be positive");
  require(std::abs(split.train + split.valid + split.test - 1.0) <= 1e-9,
          "build_dataset: split fractions must sum to 1");

  InteractionDataset ds;
  std::unordered_map<std::string, index_t> user_index;
  std::unordered_map<std::string, index_t> item_index;
  std::vector<std::vector<index_t>> items_of_user;  // first-appearance order, deduped
  std::unordered_set<std::uint64_t> seen;

  for (const auto& [su, si] : pairs) {
    auto [uit, uinserted] = user_index.try_emplace(su, static_cast<index_t>(ds.user_ids.size()));
    if (uinserted) {
      ds.user_ids.push_back(su);
      items_of_user.emplace_back();
    }
    auto [iit, iinserted] = item_index.try_emplace(si, static_cast<index_t>(ds.item_ids.size()));
    if (iinserted) ds.item_ids.push_back(si);
    index_t u = uit->second, i = iit->second;
    std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(i);
    if (seen.insert(key).second) items_of_user[static_cast<std::size_t>(u)].push_back(i);
  }
  ds.num_users = static_cast<index_t>(ds.user_ids.size());
  ds.num_items = static_cast<index_t>(ds.item_ids.size());
  ds.user_train_items.resize(static_cast<std::size_t>(ds.num_users));

  for (index_t u = 0; u < ds.num_users; ++u) {
    std::vector<index_t>& items = items_of_user[static_cast<std::size_t>(u)];
    const std::size_t n = items.size();
    std::size_t nv = 0, nt = 0;
    if (n >= 3) {
      std::mt19937_64 rng(seed_mix(seed, static_cast<std::uint64_t>(u)));
      std::shuffle(items.begin(), items.end(), rng);
      nv = static_cast<std::size_t>(std::llround(split.valid * static_cast<double>(n)));
      nt = static_cast<std::size_t>(std::llround(split.test * static_cast<double>(n)));
      // Keep at least one training item so eval users always appear in train.
      if (nv + nt >= n) {
        nt = std::min(nt, n - 1);
        nv = std::min(nv, n - 1 - nt);
      }
    }
    const std::size_t ntr = n - nv - nt;
    std::vector<index_t> tr(items.begin(), items.begin() + ntr);
    std::vector<index_t> va(items.begin() + ntr, items.begin() + ntr + nv);
    std::vector<index_t> te(items.begin() + ntr + nv, items.end());
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    std::sort(te.begin(), te.end());
    for (index_t i : tr) ds.train_pairs.emplace_back(u, i);
    for (index_t i : va) ds.valid_pairs.emplace_back(u, i);
    for (index_t i : te) ds.test_pairs.emplace_back(u, i);
    ds.user_train_items[static_cast<std::size_t>(u)] = std::move(tr);
  }
  return ds;
}

// Checks the structural invariants; throws on the first violation.
inline void validate_dataset(const InteractionDataset& ds) {
  auto in_range = [&](const std::pair<index_t, index_t>& p) {
    return p.first >= 0 && p.first < ds.num_users && p.second >= 0 && p.second < ds.num_items;
  };
  std::unordered_set<std::uint64_t> seen;
  auto key = [](const std::pair<index_t, index_t>& p) {
    return (static_cast<std::uint64_t>(p.first) << 32) | static_cast<std::uint32_t>(p.second);
  };
  for (const auto* pairs : {&ds.train_pairs, &ds.valid_pairs, &ds.test_pairs}) {
    for (const auto& p : *pairs) {
      require(in_range(p), "dataset: index out of range");
      require(seen.insert(key(p)).second, "dataset: train/valid/test pairs not disjoint");
    }
  }
  require(ds.user_train_items.size() == static_cast<std::size_t>(ds.num_users),
          "dataset: user_train_items size mismatch");
  std::vector<std::vector<index_t>> proj(static_cast<std::size_t>(ds.num_users));
  for (const auto& [u, i] : ds.train_pairs) proj[static_cast<std::size_t>(u)].push_back(i);
  for (index_t u = 0; u < ds.num_users; ++u) {
    std::vector<index_t> p = proj[static_cast<std::size_t>(u)];
    std::sort(p.begin(), p.end());
    require(p == ds.user_train_items[static_cast<std::size_t>(u)],
            "dataset: user_train_items is not the projection of train_pairs");
  }
  for (const auto* pairs : {&ds.valid_pairs, &ds.test_pairs})
    for (const auto& p : *pairs)
      require(!ds.user_train_items[static_cast<std::size_t>(p.first)].empty(),
              "dataset: eval user missing from train");
}

// Builds the symmetric-normalized bipartite CSR over train_pairs.
inline NormalizedAdjacency build_adjacency(const InteractionDataset& ds) {
  NormalizedAdjacency adj;
  adj.num_users = ds.num_users;
  adj.num_items = ds.num_items;

  std::vector<std::int64_t> deg_item(static_cast<std::size_t>(ds.num_items), 0);
  for (const auto& [u, i] : ds.train_pairs) ++deg_item[static_cast<std::size_t>(i)];

  adj.user_ptr.assign(static_cast<std::size_t>(ds.num_users) + 1, 0);
  for (index_t u = 0; u < ds.num_users; ++u)
    adj.user_ptr[static_cast<std::size_t>(u) + 1] =
        adj.user_ptr[static_cast<std::size_t>(u)] +
        static_cast<std::int64_t>(ds.user_train_items[static_cast<std::size_t>(u)].size());
  const std::size_t nnz = static_cast<std::size_t>(adj.user_ptr.back());
  adj.user_adj.resize(nnz);
  adj.user_weight.resize(nnz);

  adj.item_ptr.assign(static_cast<std::size_t>(ds.num_items) + 1, 0);
  for (index_t i = 0; i < ds.num_items; ++i)
    adj.item_ptr[static_cast<std::size_t>(i) + 1] =
        adj.item_ptr[static_cast<std::size_t>(i)] + deg_item[static_cast<std::size_t>(i)];
  adj.item_adj.resize(nnz);
  adj.item_weight.resize(nnz);

  std::vector<std::int64_t> item_fill(adj.item_ptr.begin(), adj.item_ptr.end() - 1);
  std::size_t e = 0;
  for (index_t u = 0; u < ds.num_users; ++u) {
    const auto& items = ds.user_train_items[static_cast<std::size_t>(u)];
    const double du = static_cast<double>(items.size());
    for (index_t i : items) {
      const double w = 1.0 / std::sqrt(du * static_cast<double>(deg_item[static_cast<std::size_t>(i)]));
      adj.user_adj[e] = i;
      adj.user_weight[e] = w;
      ++e;
      std::int64_t slot = item_fill[static_cast<std::size_t>(i)]++;
      adj.item_adj[static_cast<std::size_t>(slot)] = u;
      adj.item_weight[static_cast<std::size_t>(slot)] = w;
    }
  }
  return adj;
}

}  // namespace cfrank
