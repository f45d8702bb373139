#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cip/agent/config.hpp"
#include "cip/envs/envs.hpp"

namespace cip::cli {

/// Git blob hash: SHA-1 over "blob <size>\0" followed by the bytes.
std::string git_blob_sha1(const std::string& bytes);

/// Written as out_dir/manifest.json by `train`.
struct RunManifest {
  int version = 1;
  std::string env;
  std::string variant = "cip";
  std::vector<std::uint64_t> seeds;
  AgentConfig config;
  std::string config_hash;  // git_blob_sha1(config_to_json(config))
  std::string binary_hash;  // git_blob_sha1 of the executable, empty when unreadable
  ReferenceReturns references;
  std::uint64_t reference_seed = 0;
  std::vector<std::string> files;  // relative to out_dir

  bool operator==(const RunManifest& other) const;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest(const std::string& path);

/// Parses "0,1,2" or "0-3".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

inline constexpr int kReferenceEpisodes = 100;
inline constexpr std::uint64_t kReferenceSeed = 0x7265660a;

/// 100 * (ret - random) / (oracle - random), clipped below at 0.
double normalized_score(double ret, const ReferenceReturns& refs);
/// max(0, 1 - normalized / 100).
double optimality_gap(double normalized);

struct TrainOptions {
  std::optional<std::string> config_path;
  std::string env = "distractor_reacher";
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;
  std::string variant = "cip";
  bool baseline = false;
  std::optional<std::int64_t> total_steps;
  int jobs = 1;
  bool overwrite = false;
  bool quiet = false;
};

struct DiscoverOptions {
  std::string input;
  std::string out_path;
  double theta = 0.05;
  double w_min = 0.05;
  std::int64_t sample_size = 10000;
  bool allow_small = false;
  bool overwrite = false;
};

struct AugmentOptions {
  std::string input;
  std::string matrices_path;
  std::string out_path;
  std::optional<double> theta;
  double rate = 0.5;
  std::uint64_t seed = 0;
  bool overwrite = false;
};

struct SemgenOptions {
  std::optional<std::string> spec_path;
  std::optional<int> random_p;
  double edge_prob = 0.4;
  std::string noise = "uniform";
  std::int64_t n = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
  bool overwrite = false;
};

struct EvalOptions {
  std::string metrics_dir;
  std::optional<std::string> env;  // needed only when no manifest is found
  std::optional<std::string> out_path;
  std::size_t final_episodes = 20;
  bool overwrite = false;
};

struct CollectOptions {
  std::string env = "distractor_reacher";
  std::int64_t n = 10000;
  std::uint64_t seed = 0;
  std::string out_path;
  bool overwrite = false;
};

/// Each command returns the process exit status and reports problems on `err`.
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);
int cmd_discover(const DiscoverOptions& opt, std::ostream& out, std::ostream& err);
int cmd_augment(const AugmentOptions& opt, std::ostream& out, std::ostream& err);
int cmd_semgen(const SemgenOptions& opt, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);
int cmd_collect(const CollectOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace cip::cli
