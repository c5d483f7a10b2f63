#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "bandit_icl/datagen.hpp"
#include "bandit_icl/error.hpp"
#include "json.hpp"

namespace bandit_icl {
namespace {

static_assert(std::endian::native == std::endian::little, "dataset IO assumes a little-endian host");

constexpr std::array<char, 8> kBinaryMagic = {'B', 'I', 'C', 'L', 'D', 'S', 'E', 'T'};
constexpr std::string_view kTextMagic = "BICL-DATASET-TEXT";
// The manifest is rewritten in place once coverage is known, so it occupies a
// fixed, space-padded slot.
constexpr std::size_t kManifestSlot = 4096;

nlohmann::json family_to_json(const FamilyConfig& f) {
  return {{"family", std::string(to_string(f.family))},
          {"d", f.d},
          {"d2", f.d2},
          {"rank", f.rank},
          {"num_arms", f.num_arms},
          {"noise_variance", f.noise_variance},
          {"horizon", f.horizon},
          {"num_new_actions_per_task", f.num_new_actions_per_task},
          {"seed", f.seed}};
}

FamilyConfig family_from_json(const nlohmann::json& j) {
  FamilyConfig f;
  f.family = parse_family(j.at("family").get<std::string>());
  f.d = j.at("d").get<int>();
  f.d2 = j.at("d2").get<int>();
  f.rank = j.at("rank").get<int>();
  f.num_arms = j.at("num_arms").get<int>();
  f.noise_variance = j.at("noise_variance").get<double>();
  f.horizon = j.at("horizon").get<int>();
  f.num_new_actions_per_task = j.at("num_new_actions_per_task").get<int>();
  f.seed = j.at("seed").get<std::uint64_t>();
  return f;
}

std::string manifest_json(const DatasetManifest& m) {
  nlohmann::json j = {{"format_version", m.format_version},
                      {"num_trajectories", m.num_trajectories},
                      {"horizon", m.horizon},
                      {"num_arms", m.num_arms},
                      {"dim", m.dim},
                      {"family", family_to_json(m.family)},
                      {"demonstrator", m.demonstrator},
                      {"noise_variance", m.noise_variance},
                      {"seed", m.seed},
                      {"first_task_id", m.first_task_id},
                      {"trajectories_per_task", m.trajectories_per_task},
                      {"coverage_fraction", m.coverage_fraction}};
  std::string s = j.dump();
  if (s.size() > kManifestSlot) fail(ErrorKind::Io, "dataset manifest exceeds its slot");
  s.resize(kManifestSlot, ' ');
  return s;
}

DatasetManifest manifest_from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    m.format_version = j.at("format_version").get<std::uint32_t>();
    m.num_trajectories = j.at("num_trajectories").get<std::uint64_t>();
    m.horizon = j.at("horizon").get<int>();
    m.num_arms = j.at("num_arms").get<int>();
    m.dim = j.at("dim").get<int>();
    m.family = family_from_json(j.at("family"));
    m.demonstrator = j.at("demonstrator").get<std::string>();
    m.noise_variance = j.at("noise_variance").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.first_task_id = j.at("first_task_id").get<std::uint64_t>();
    m.trajectories_per_task = j.at("trajectories_per_task").get<int>();
    m.coverage_fraction = j.at("coverage_fraction").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ParseError, std::string("dataset manifest: ") + e.what());
  }
  return m;
}

template <typename T>
void put(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  out.write(bytes.data(), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes;
  in.read(bytes.data(), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) fail(ErrorKind::Truncated, "dataset ended early");
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  if (s.size() > 0xffff) fail(ErrorKind::Io, "tag too long");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto len = get<std::uint16_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (in.gcount() != len) fail(ErrorKind::Truncated, "dataset ended inside a tag");
  return s;
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, DatasetFormat format, const DatasetManifest& manifest)
      : format_(format), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
    if (format_ == DatasetFormat::Binary) {
      out_.write(kBinaryMagic.data(), kBinaryMagic.size());
      put<std::uint32_t>(out_, kDatasetFormatVersion);
      put<std::uint32_t>(out_, static_cast<std::uint32_t>(kManifestSlot));
      manifest_pos_ = out_.tellp();
      out_ << manifest_json(manifest);
      put<std::uint64_t>(out_, manifest.num_trajectories);
    } else {
      out_ << kTextMagic << ' ' << kDatasetFormatVersion << '\n' << "manifest ";
      manifest_pos_ = out_.tellp();
      out_ << manifest_json(manifest) << '\n' << "count " << manifest.num_trajectories << '\n';
    }
  }

  void append(const Trajectory& t) {
    if (format_ == DatasetFormat::Binary) {
      put<std::uint64_t>(out_, t.task_id);
      put<std::uint32_t>(out_, static_cast<std::uint32_t>(t.actions.size()));
      put<std::uint32_t>(out_, static_cast<std::uint32_t>(t.true_means.size()));
      put<std::int32_t>(out_, t.optimal_action);
      put_string(out_, t.family);
      put_string(out_, t.demonstrator);
      for (int a : t.actions) put<std::uint32_t>(out_, static_cast<std::uint32_t>(a));
      for (double r : t.rewards) put<double>(out_, r);
      for (double m : t.true_means) put<double>(out_, m);
    } else {
      out_ << t.task_id << ' ' << t.family << ' ' << t.demonstrator << ' ' << t.actions.size() << ' '
           << t.true_means.size() << ' ' << t.optimal_action;
      for (int a : t.actions) out_ << ' ' << a;
      for (double r : t.rewards) out_ << ' ' << fmt17(r);
      for (double m : t.true_means) out_ << ' ' << fmt17(m);
      out_ << '\n';
    }
  }

  void finish(const DatasetManifest& manifest) {
    out_.seekp(manifest_pos_);
    out_ << manifest_json(manifest);
    out_.flush();
    if (!out_) fail(ErrorKind::Io, "write failed");
  }

 private:
  DatasetFormat format_;
  std::ofstream out_;
  std::streampos manifest_pos_{};
};

Trajectory parse_text_record(const std::string& line, std::size_t line_no) {
  std::istringstream ss(line);
  Trajectory t;
  std::size_t n = 0;
  std::size_t arms = 0;
  if (!(ss >> t.task_id >> t.family >> t.demonstrator >> n >> arms >> t.optimal_action)) {
    fail(ErrorKind::ParseError, "dataset line " + std::to_string(line_no) + ": bad record header");
  }
  t.actions.resize(n);
  t.rewards.resize(n);
  t.true_means.resize(arms);
  for (auto& a : t.actions) ss >> a;
  for (auto& r : t.rewards) ss >> r;
  for (auto& m : t.true_means) ss >> m;
  if (!ss) fail(ErrorKind::Truncated, "dataset line " + std::to_string(line_no) + ": record too short");
  return t;
}

}  // namespace

bool DatasetManifest::operator==(const DatasetManifest& o) const {
  return manifest_json(*this) == manifest_json(o);
}

void write_dataset(const std::filesystem::path& path, const Dataset& data, DatasetFormat format) {
  DatasetManifest m = data.manifest;
  m.num_trajectories = data.trajectories.size();
  DatasetWriter writer(path, format, m);
  for (const Trajectory& t : data.trajectories) writer.append(t);
  writer.finish(m);
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  if (in.gcount() != static_cast<std::streamsize>(head.size())) fail(ErrorKind::Truncated, "dataset header");
  Dataset data;
  if (head == kBinaryMagic) {
    const auto version = get<std::uint32_t>(in);
    if (version != kDatasetFormatVersion) {
      fail(ErrorKind::VersionMismatch, "dataset format version " + std::to_string(version));
    }
    const auto slot = get<std::uint32_t>(in);
    std::string manifest(slot, '\0');
    in.read(manifest.data(), slot);
    if (in.gcount() != static_cast<std::streamsize>(slot)) fail(ErrorKind::Truncated, "dataset manifest");
    data.manifest = manifest_from_json(manifest);
    const auto count = get<std::uint64_t>(in);
    if (count != data.manifest.num_trajectories) fail(ErrorKind::Validation, "manifest count mismatch");
    data.trajectories.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
      Trajectory t;
      t.task_id = get<std::uint64_t>(in);
      const auto n = get<std::uint32_t>(in);
      const auto arms = get<std::uint32_t>(in);
      t.optimal_action = get<std::int32_t>(in);
      t.family = get_string(in);
      t.demonstrator = get_string(in);
      t.actions.resize(n);
      t.rewards.resize(n);
      t.true_means.resize(arms);
      for (auto& a : t.actions) a = static_cast<int>(get<std::uint32_t>(in));
      for (auto& r : t.rewards) r = get<double>(in);
      for (auto& m : t.true_means) m = get<double>(in);
      validate_trajectory(t);
      data.trajectories.push_back(std::move(t));
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::Validation, "trailing bytes after records");
  } else {
    in.seekg(0);
    std::string line;
    std::getline(in, line);
    std::istringstream magic(line);
    std::string tag;
    std::uint32_t version = 0;
    magic >> tag >> version;
    if (tag != kTextMagic) fail(ErrorKind::ParseError, "not a dataset file: " + path.string());
    if (version != kDatasetFormatVersion) {
      fail(ErrorKind::VersionMismatch, "dataset format version " + std::to_string(version));
    }
    std::getline(in, line);
    if (line.rfind("manifest ", 0) != 0) fail(ErrorKind::ParseError, "dataset line 2: expected manifest");
    data.manifest = manifest_from_json(line.substr(9));
    std::getline(in, line);
    std::uint64_t count = 0;
    if (std::sscanf(line.c_str(), "count %lu", &count) != 1) fail(ErrorKind::ParseError, "dataset line 3: count");
    if (count != data.manifest.num_trajectories) fail(ErrorKind::Validation, "manifest count mismatch");
    for (std::uint64_t i = 0; i < count; ++i) {
      if (!std::getline(in, line)) fail(ErrorKind::Truncated, "dataset has fewer records than its count");
      Trajectory t = parse_text_record(line, static_cast<std::size_t>(i) + 4);
      validate_trajectory(t);
      data.trajectories.push_back(std::move(t));
    }
  }
  for (const Trajectory& t : data.trajectories) {
    if (t.horizon() != data.manifest.horizon || t.num_arms() != data.manifest.num_arms) {
      fail(ErrorKind::Validation, "trajectory shape disagrees with manifest");
    }
  }
  return data;
}

DatasetManifest generate_pretraining_set(const TaskWorld& world, const DemonstratorConfig& demo,
                                         const GenerateOptions& options, const std::filesystem::path& path) {
  if (options.trajectories_per_task < 1) fail(ErrorKind::Validation, "trajectories_per_task must be >= 1");
  GenerateOptions block_opts = options;
  DatasetManifest manifest;
  {
    GenerateOptions empty = options;
    empty.num_tasks = 0;
    manifest = generate_dataset(world, demo, empty).manifest;
  }
  manifest.num_trajectories = options.num_tasks * static_cast<std::uint64_t>(options.trajectories_per_task);
  DatasetWriter writer(path, options.format, manifest);
  constexpr std::uint64_t kBlock = 2048;
  std::uint64_t covered = 0;
  for (std::uint64_t start = 0; start < options.num_tasks; start += kBlock) {
    block_opts.first_task_id = options.first_task_id + start;
    block_opts.num_tasks = std::min(kBlock, options.num_tasks - start);
    const Dataset block = generate_dataset(world, demo, block_opts);
    for (const Trajectory& t : block.trajectories) {
      std::vector<bool> seen(t.true_means.size(), false);
      for (int a : t.actions) seen[static_cast<std::size_t>(a)] = true;
      if (std::find(seen.begin(), seen.end(), false) == seen.end()) ++covered;
      writer.append(t);
    }
  }
  manifest.coverage_fraction =
      manifest.num_trajectories ? static_cast<double>(covered) / static_cast<double>(manifest.num_trajectories) : 0.0;
  writer.finish(manifest);
  return manifest;
}

}  // namespace bandit_icl
