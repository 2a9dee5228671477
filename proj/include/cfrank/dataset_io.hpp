#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cfrank/dataset.hpp"

namespace cfrank {

// Writes `content` to `path` atomically (write to a temp file, then rename).
inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string dataset_stats_line(const InteractionDataset& ds) {
  const std::size_t inter =
      ds.train_pairs.size() + ds.valid_pairs.size() + ds.test_pairs.size();
  const double density =
      100.0 * static_cast<double>(inter) /
      (static_cast<double>(ds.num_users) * static_cast<double>(ds.num_items));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "#user=%d #item=%d #inter=%zu density=%.3f%%", ds.num_users,
                ds.num_items, inter, density);
  return buf;
}

// Prepared-dataset directory layout:
//   users.txt / items.txt   external id per line; the line number is the
//                           dense index
//   train.txt / valid.txt / test.txt   "<user> <item>" dense pairs per line
//   stats.txt               "#user=... #item=... #inter=... density=...%"
inline void save_prepared(const std::filesystem::path& dir, const InteractionDataset& ds) {
  std::filesystem::create_directories(dir);
  auto write_ids = [&](const char* name, const std::vector<std::string>& ids) {
    std::string body;
    for (const auto& id : ids) {
      body += id;
      body += '\n';
    }
    atomic_write_file(dir / name, body);
  };
  auto write_pairs = [&](const char* name, const std::vector<std::pair<index_t, index_t>>& ps) {
    std::string body;
    for (const auto& [u, i] : ps) {
      body += std::to_string(u);
      body += ' ';
      body += std::to_string(i);
      body += '\n';
    }
    atomic_write_file(dir / name, body);
  };
  write_ids("users.txt", ds.user_ids);
  write_ids("items.txt", ds.item_ids);
  write_pairs("train.txt", ds.train_pairs);
  write_pairs("valid.txt", ds.valid_pairs);
  write_pairs("test.txt", ds.test_pairs);
  atomic_write_file(dir / "stats.txt", dataset_stats_line(ds) + "\n");
}

inline InteractionDataset load_prepared(const std::filesystem::path& dir) {
  InteractionDataset ds;
  auto read_ids = [&](const char* name, std::vector<std::string>& ids) {
    std::ifstream in(dir / name);
    if (!in) throw std::runtime_error("cannot open " + (dir / name).string());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      ids.push_back(line);
    }
  };
  auto read_pairs = [&](const char* name, std::vector<std::pair<index_t, index_t>>& ps) {
    std::ifstream in(dir / name);
    if (!in) throw std::runtime_error("cannot open " + (dir / name).string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream iss(line);
      long long u = 0, i = 0;
      if (!(iss >> u >> i))
        throw std::runtime_error((dir / name).string() + ":" + std::to_string(line_no) +
                                 ": expected \"<user> <item>\"");
      ps.emplace_back(static_cast<index_t>(u), static_cast<index_t>(i));
    }
  };
  read_ids("users.txt", ds.user_ids);
  read_ids("items.txt", ds.item_ids);
  ds.num_users = static_cast<index_t>(ds.user_ids.size());
  ds.num_items = static_cast<index_t>(ds.item_ids.size());
  read_pairs("train.txt", ds.train_pairs);
  read_pairs("valid.txt", ds.valid_pairs);
  read_pairs("test.txt", ds.test_pairs);
  ds.user_train_items.resize(static_cast<std::size_t>(ds.num_users));
  for (const auto& [u, i] : ds.train_pairs) {
    require(u >= 0 && u < ds.num_users && i >= 0 && i < ds.num_items,
            "prepared dataset: pair index out of range");
    ds.user_train_items[static_cast<std::size_t>(u)].push_back(i);
  }
  for (auto& items : ds.user_train_items) std::sort(items.begin(), items.end());
  validate_dataset(ds);
  return ds;
}

}  // namespace cfrank
