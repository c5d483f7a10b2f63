#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>

#include "bandit_icl/datagen.hpp"
#include "bandit_icl/error.hpp"

namespace bandit_icl {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Integer-looking ids compare numerically so "9" sorts before "10".
bool id_less(const std::string& a, const std::string& b) {
  long long x = 0;
  long long y = 0;
  const auto rx = std::from_chars(a.data(), a.data() + a.size(), x);
  const auto ry = std::from_chars(b.data(), b.data() + b.size(), y);
  const bool ix = rx.ec == std::errc() && rx.ptr == a.data() + a.size();
  const bool iy = ry.ec == std::errc() && ry.ptr == b.data() + b.size();
  if (ix && iy) return x < y;
  if (ix != iy) return ix;
  return a < b;
}

struct IdLess {
  bool operator()(const std::string& a, const std::string& b) const { return id_less(a, b); }
};

struct Sum {
  double total = 0.0;
  long count = 0;
};

}  // namespace

RatingsData ingest_ratings_csv(const std::filesystem::path& path, int num_items, int min_user_interactions,
                               double noise_std) {
  if (num_items < 1) fail(ErrorKind::Validation, "num_items must be >= 1");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) fail(ErrorKind::ParseError, "line 1: missing header");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "user_id" || header[1] != "item_id" || header[2] != "rating") {
    fail(ErrorKind::ParseError, "line 1: expected header user_id,item_id,rating[,timestamp]");
  }

  struct Row {
    std::string user;
    std::string item;
    double rating;
  };
  std::vector<Row> rows;
  std::map<std::string, long, IdLess> item_counts;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < 3 || f.size() > 4 || f[0].empty() || f[1].empty()) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected 3 or 4 fields");
    }
    double rating = 0.0;
    const auto r = std::from_chars(f[2].data(), f[2].data() + f[2].size(), rating);
    if (r.ec != std::errc() || r.ptr != f[2].data() + f[2].size() || !std::isfinite(rating)) {
      fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad rating '" + f[2] + "'");
    }
    lo = std::min(lo, rating);
    hi = std::max(hi, rating);
    ++item_counts[f[1]];
    rows.push_back({f[0], f[1], rating});
  }
  if (static_cast<int>(item_counts.size()) < num_items) {
    fail(ErrorKind::TooFewItems, "ratings file has " + std::to_string(item_counts.size()) + " distinct items, need " +
                                     std::to_string(num_items));
  }

  std::vector<std::pair<std::string, long>> ranked(item_counts.begin(), item_counts.end());
  // item_counts is already in id order, so a stable sort keeps id-ascending ties.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(static_cast<std::size_t>(num_items));

  RatingsData out;
  std::unordered_map<std::string, int> arm_of;
  for (const auto& [id, count] : ranked) {
    arm_of.emplace(id, static_cast<int>(out.item_ids.size()));
    out.item_ids.push_back(id);
  }

  std::vector<Sum> global(static_cast<std::size_t>(num_items));
  std::map<std::string, std::vector<Sum>, IdLess> per_user;
  for (const Row& row : rows) {
    const auto it = arm_of.find(row.item);
    if (it == arm_of.end()) continue;
    auto& sums = per_user[row.user];
    if (sums.empty()) sums.resize(static_cast<std::size_t>(num_items));
    sums[static_cast<std::size_t>(it->second)].total += row.rating;
    ++sums[static_cast<std::size_t>(it->second)].count;
    global[static_cast<std::size_t>(it->second)].total += row.rating;
    ++global[static_cast<std::size_t>(it->second)].count;
  }

  for (const auto& [user, sums] : per_user) {
    long interactions = 0;
    for (const Sum& s : sums) interactions += s.count;
    if (interactions < min_user_interactions) continue;
    Eigen::VectorXd means(num_items);
    for (int a = 0; a < num_items; ++a) {
      const Sum& s = sums[static_cast<std::size_t>(a)];
      const Sum& g = global[static_cast<std::size_t>(a)];
      means[a] = s.count > 0 ? s.total / static_cast<double>(s.count) : g.total / static_cast<double>(g.count);
    }
    out.user_ids.push_back(user);
    out.tasks.push_back(make_histogram_task(std::move(means), noise_std));
  }
  out.rating_min = rows.empty() ? 0.0 : lo;
  out.rating_max = rows.empty() ? 0.0 : hi;
  return out;
}

}  // namespace bandit_icl
