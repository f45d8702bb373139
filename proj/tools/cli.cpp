#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cip/agent/replay.hpp"
#include "cip/agent/train.hpp"
#include "cip/augment/augment.hpp"
#include "cip/causal/direct_lingam.hpp"
#include "cip/causal/reward_matrices.hpp"
#include "cip/envs/sem.hpp"
#include "cip/envs/transition_io.hpp"
#include "cip/numkit/checkpoint.hpp"
#include "cip/numkit/error.hpp"

namespace fs = std::filesystem;

namespace cip::cli {

std::string git_blob_sha1(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("sha1 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path + "'");
  f << bytes;
  if (!f) throw Error("write failed for '" + path + "'");
}

// Refuses to clobber an existing output unless --overwrite was given.
void check_output(const std::string& path, bool overwrite) {
  if (path.empty()) throw ConfigError("an output path is required", "out");
  if (fs::exists(path) && !overwrite) {
    throw Error("'" + path + "' exists; pass --overwrite to replace it");
  }
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string self_hash() {
  std::error_code ec;
  const fs::path exe = fs::read_symlink("/proc/self/exe", ec);
  if (ec) return {};
  try {
    return git_blob_sha1(read_file(exe.string()));
  } catch (const Error&) {
    return {};
  }
}

void report(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what();
  if (const auto* c = dynamic_cast<const ConfigError*>(&e); c && !c->field().empty()) {
    err << " [field: " << c->field() << "]";
  }
  if (const auto* d = dynamic_cast<const DegenerateInputError*>(&e)) {
    err << " [column: " << d->column() << "]";
  }
  if (const auto* p = dynamic_cast<const ParseError*>(&e)) err << " [line: " << p->line() << "]";
  err << "\n";
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return 0;
  } catch (const std::exception& e) {
    report(err, e);
    return 1;
  }
}

}  // namespace

bool RunManifest::operator==(const RunManifest& o) const {
  return version == o.version && env == o.env && variant == o.variant && seeds == o.seeds &&
         config_to_json(config) == config_to_json(o.config) && config_hash == o.config_hash &&
         binary_hash == o.binary_hash && references.random_return == o.references.random_return &&
         references.oracle_return == o.references.oracle_return &&
         references.episodes == o.references.episodes && reference_seed == o.reference_seed &&
         files == o.files;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.version;
  j["env"] = m.env;
  j["variant"] = m.variant;
  j["seeds"] = m.seeds;
  j["config"] = nlohmann::ordered_json::parse(config_to_json(m.config));
  j["config_hash"] = m.config_hash;
  j["binary_hash"] = m.binary_hash;
  j["references"] = {{"random_return", m.references.random_return},
                     {"oracle_return", m.references.oracle_return},
                     {"episodes", m.references.episodes},
                     {"seed", m.reference_seed}};
  j["files"] = m.files;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw ConfigError("manifest: unsupported version", "version");
    m.env = j.at("env").get<std::string>();
    m.variant = j.at("variant").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.config = config_from_json(j.at("config").dump());
    m.config_hash = j.at("config_hash").get<std::string>();
    m.binary_hash = j.at("binary_hash").get<std::string>();
    const auto& r = j.at("references");
    m.references.random_return = r.at("random_return").get<double>();
    m.references.oracle_return = r.at("oracle_return").get<double>();
    m.references.episodes = r.at("episodes").get<int>();
    m.reference_seed = r.at("seed").get<std::uint64_t>();
    m.files = j.at("files").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest: ") + e.what());
  }
  return m;
}

void save_manifest(const std::string& path, const RunManifest& m) { write_file(path, manifest_to_json(m)); }

RunManifest load_manifest(const std::string& path) { return manifest_from_json(read_file(path)); }

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) throw ConfigError("bad seed '" + s + "'", "seeds");
    return v;
  };
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(item));
      continue;
    }
    const std::uint64_t lo = number(item.substr(0, dash));
    const std::uint64_t hi = number(item.substr(dash + 1));
    if (hi < lo) throw ConfigError("bad seed range '" + item + "'", "seeds");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("empty seed list", "seeds");
  std::set<std::uint64_t> seen;
  for (auto s : out) {
    if (!seen.insert(s).second) throw ConfigError("duplicate seed " + std::to_string(s), "seeds");
  }
  return out;
}

double normalized_score(double ret, const ReferenceReturns& refs) {
  const double span = refs.oracle_return - refs.random_return;
  if (!(std::abs(span) > 0.0)) throw DegenerateInputError("reference returns coincide", "oracle_return");
  return std::max(0.0, 100.0 * (ret - refs.random_return) / span);
}

double optimality_gap(double normalized) { return std::max(0.0, 1.0 - normalized / 100.0); }

// ---------------------------------------------------------------- train

namespace {

std::string refits_csv(const std::vector<RefitEvent>& refits) {
  std::ostringstream ss;
  ss << "step,matrices_hash,failed,synthetic_added,swap_skipped,uncontrollable\n";
  for (const auto& e : refits) {
    ss << e.step << ',' << std::hex << std::setw(16) << std::setfill('0') << e.matrices_hash
       << std::dec << ',' << (e.failed ? 1 : 0) << ',' << e.synthetic_added << ',' << e.swap_skipped
       << ',';
    for (std::size_t i = 0; i < e.uncontrollable.size(); ++i) {
      ss << (i ? " " : "") << e.uncontrollable[i];
    }
    ss << '\n';
  }
  return ss.str();
}

std::string snapshot_json(const AgentState& agent) {
  if (agent.has_matrices) return matrices_to_json(agent.matrices, agent.weights, agent.config.theta) + "\n";
  nlohmann::ordered_json doc;
  doc["method"] = "none";
  doc["fitted_on"] = 0;
  doc["m_s_to_r"] = nlohmann::json::array();
  doc["m_a_to_r"] = nlohmann::json::array();
  doc["omega"] = std::vector<double>(static_cast<std::size_t>(agent.d_a), 1.0);
  doc["theta"] = agent.config.theta;
  doc["uncontrollable"] = nlohmann::json::array();
  return doc.dump(2) + "\n";
}

const char* kSeedFiles[] = {"metrics.csv", "matrices.json", "checkpoint.bin", "refits.csv"};

void write_seed_outputs(const std::string& dir, const TrainResult& res) {
  fs::create_directories(dir);
  std::ostringstream metrics;
  write_metrics_csv(metrics, res.metrics);
  write_file(dir + "/metrics.csv", metrics.str());
  write_file(dir + "/matrices.json", snapshot_json(res.agent));
  save_checkpoint(dir + "/checkpoint.bin", agent_checkpoint(res.agent));
  write_file(dir + "/refits.csv", refits_csv(res.refits));

  // Read everything back before reporting success.
  std::ifstream m(dir + "/metrics.csv");
  if (read_metrics_csv(m).size() != res.metrics.size()) throw Error("metrics.csv did not round-trip");
  if (!nlohmann::json::accept(read_file(dir + "/matrices.json"))) throw Error("matrices.json is not valid JSON");
  if (load_checkpoint(dir + "/checkpoint.bin").size() != agent_checkpoint(res.agent).size()) {
    throw Error("checkpoint.bin did not round-trip");
  }
}

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    AgentConfig config = opt.config_path ? load_config(*opt.config_path) : AgentConfig{};
    if (opt.total_steps) config.total_steps = *opt.total_steps;
    const std::string variant = opt.baseline ? "sac" : opt.variant;
    config = variant_config(config, variant);
    config.validate();
    const EnvSpec env = make_env(opt.env);
    if (opt.seeds.empty()) throw ConfigError("no seeds given", "seeds");
    if (opt.out_dir.empty()) throw ConfigError("an output directory is required", "out");
    const std::string manifest_path = opt.out_dir + "/manifest.json";
    if (fs::exists(manifest_path) && !opt.overwrite) {
      throw Error("'" + manifest_path + "' exists; pass --overwrite to replace it");
    }
    fs::create_directories(opt.out_dir);

    RunManifest manifest;
    manifest.env = env.name;
    manifest.variant = variant;
    manifest.seeds = opt.seeds;
    manifest.config = config;
    manifest.config_hash = git_blob_sha1(config_to_json(config));
    manifest.binary_hash = self_hash();
    manifest.references = reference_returns(env, kReferenceEpisodes, kReferenceSeed);
    manifest.reference_seed = kReferenceSeed;

    // Seeds are independent workers; outputs do not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::mutex io;
    std::vector<std::string> failures(opt.seeds.size());
    auto worker = [&] {
      for (std::size_t i = next++; i < opt.seeds.size(); i = next++) {
        AgentConfig c = config;
        c.seed = opt.seeds[i];
        const std::string dir = opt.out_dir + "/seed_" + std::to_string(c.seed);
        try {
          TrainResult res = train(c, env);
          write_seed_outputs(dir, res);
          if (!opt.quiet) {
            std::lock_guard<std::mutex> lock(io);
            out << "seed " << c.seed << ": " << res.metrics.size() << " episodes, final return "
                << format_double(final_return(res.metrics)) << "\n";
          }
        } catch (const std::exception& e) {
          failures[i] = "seed " + std::to_string(c.seed) + ": " + e.what();
        }
      }
    };
    const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(opt.seeds.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (!f.empty()) throw Error(f);
    }

    for (auto s : opt.seeds) {
      for (const char* f : kSeedFiles) manifest.files.push_back("seed_" + std::to_string(s) + "/" + f);
    }
    save_manifest(manifest_path, manifest);
    for (const auto& f : manifest.files) {
      if (!fs::exists(opt.out_dir + "/" + f)) throw Error("missing output '" + f + "'");
    }
    if (!(load_manifest(manifest_path) == manifest)) throw Error("manifest did not round-trip");
  });
}

// ---------------------------------------------------------------- discover

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string lingam_json(const LingamResult& res, const std::vector<std::string>& names, Index n) {
  auto rows = [](const Matrix& m) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i) {
      out[static_cast<std::size_t>(i)].assign(m.row(i).data(), m.row(i).data() + m.cols());
    }
    return out;
  };
  nlohmann::ordered_json doc;
  doc["method"] = "direct_lingam";
  doc["fitted_on"] = n;
  doc["names"] = names;
  doc["order"] = res.order;
  doc["B"] = rows(res.B);
  doc["B_std"] = rows(res.B_std);
  return doc.dump(2) + "\n";
}

}  // namespace

int cmd_discover(const DiscoverOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(opt.theta >= 0.0)) throw ConfigError("theta must be non-negative", "theta");
    check_output(opt.out_path, opt.overwrite);
    std::string doc;
    if (has_suffix(opt.input, ".csv")) {
      std::ifstream f(opt.input);
      if (!f) throw Error("cannot open '" + opt.input + "'");
      std::vector<std::string> names;
      const Matrix data = read_matrix_csv(f, &names);
      LingamOptions lo;
      lo.names = names;
      doc = lingam_json(direct_lingam_fit(data, lo), names, data.rows());
      out << "fitted " << data.cols() << " variables on " << data.rows() << " rows\n";
    } else {
      const std::vector<Transition> rows = load_transitions(opt.input);
      CausalConfig cc;
      cc.theta = opt.theta;
      cc.w_min = opt.w_min;
      cc.causal_sample_size = opt.allow_small ? std::max<Index>(1, static_cast<Index>(rows.size()))
                                              : opt.sample_size;
      if (static_cast<Index>(rows.size()) < cc.causal_sample_size) {
        throw ConfigError("discover: " + std::to_string(rows.size()) + " rows, need " +
                              std::to_string(cc.causal_sample_size) + " (or --allow-small)",
                          "causal_sample_size");
      }
      const CausalMatrices state = fit_state_reward_mask(rows, cc);
      const ActionFit action = fit_action_reward_weights(rows, cc);
      CausalMatrices m = state;
      m.m_a_to_r = action.matrices.m_a_to_r;
      m.m_a_to_r_std = action.matrices.m_a_to_r_std;
      doc = matrices_to_json(m, action.weights, opt.theta) + "\n";
      const UncontrollableSet u = uncontrollable_set(m, opt.theta);
      out << "fitted on " << rows.size() << " transitions; uncontrollable:";
      for (Index i : u.indices) out << ' ' << i;
      out << "\n";
    }
    write_file(opt.out_path, doc);
    if (!nlohmann::json::accept(read_file(opt.out_path))) throw Error("output is not valid JSON");
  });
}

// ---------------------------------------------------------------- augment

int cmd_augment(const AugmentOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(opt.rate >= 0.0 && opt.rate <= 1.0)) throw ConfigError("rate must lie in [0, 1]", "rate");
    check_output(opt.out_path, opt.overwrite);
    const std::vector<Transition> rows = load_transitions(opt.input);
    const MatricesDocument doc = matrices_from_json(read_file(opt.matrices_path));
    const double theta = opt.theta.value_or(doc.theta);
    if (!rows.empty() && doc.matrices.m_s_to_r.size() != rows.front().s.size()) {
      throw ConfigError("matrices do not match the transition state width", "m_s_to_r");
    }
    const std::size_t extra = static_cast<std::size_t>(std::ceil(opt.rate * static_cast<double>(rows.size())));
    ReplayBuffer buffer(std::max<std::size_t>(1, rows.size() + extra));
    for (const auto& t : rows) {
      Transition real = t;
      real.synthetic = false;
      buffer.add(std::move(real));
    }
    SwapStats stats;
    const auto added = rows.empty() ? std::vector<Transition>{}
                                    : augment_buffer(buffer, doc.matrices, theta, opt.rate, opt.seed, 0, &stats);
    std::vector<Transition> all;
    all.reserve(buffer.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) all.push_back(buffer.at(i));
    save_transitions(opt.out_path, all, true);
    if (load_transitions(opt.out_path).size() != all.size()) throw Error("augmented file did not round-trip");
    out << "sources " << stats.selected << ", skipped " << stats.skipped << ", added " << added.size()
        << "\n";
  });
}

// ---------------------------------------------------------------- semgen

int cmd_semgen(const SemgenOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.n < 0) throw ConfigError("n must be non-negative", "n");
    check_output(opt.out_path, opt.overwrite);
    SemSpec spec;
    if (opt.spec_path) {
      spec = sem_from_json(read_file(*opt.spec_path));
    } else if (opt.random_p) {
      RandomSemOptions ro;
      ro.p = *opt.random_p;
      ro.edge_prob = opt.edge_prob;
      ro.dist = parse_noise_dist(opt.noise);
      spec = random_sem(ro, opt.seed);
    } else {
      throw ConfigError("semgen needs --spec or --random-p", "spec");
    }
    spec.validate();
    const Matrix data = opt.n == 0 ? Matrix(0, spec.p) : sem_generate(spec, opt.n, opt.seed);
    std::ostringstream ss;
    write_matrix_csv(ss, data, sem_header(spec.p));
    write_file(opt.out_path, ss.str());
    std::ifstream back(opt.out_path);
    if (read_matrix_csv(back).rows() != data.rows()) throw Error("csv did not round-trip");
    out << "wrote " << data.rows() << " rows x " << spec.p << " columns\n";
  });
}

// ---------------------------------------------------------------- eval

namespace {

struct EvalRun {
  std::string name;
  std::string env;
  std::string variant;
  ReferenceReturns refs;
  std::vector<std::pair<std::string, std::string>> seed_files;  // (seed label, metrics path)
};

}  // namespace

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!fs::is_directory(opt.metrics_dir)) throw Error("'" + opt.metrics_dir + "' is not a directory");
    if (opt.out_path) check_output(*opt.out_path, opt.overwrite);
    std::vector<fs::path> manifests;
    std::vector<fs::path> loose;
    for (const auto& e : fs::recursive_directory_iterator(opt.metrics_dir)) {
      if (!e.is_regular_file()) continue;
      if (e.path().filename() == "manifest.json") manifests.push_back(e.path());
      if (e.path().filename() == "metrics.csv") loose.push_back(e.path());
    }
    std::sort(manifests.begin(), manifests.end());
    std::sort(loose.begin(), loose.end());

    std::vector<EvalRun> runs;
    std::set<fs::path> claimed;
    for (const auto& p : manifests) {
      const RunManifest m = load_manifest(p.string());
      EvalRun run;
      run.name = fs::relative(p.parent_path(), opt.metrics_dir).generic_string();
      run.env = m.env;
      run.variant = m.variant;
      run.refs = m.references;
      for (auto s : m.seeds) {
        const fs::path f = p.parent_path() / ("seed_" + std::to_string(s)) / "metrics.csv";
        run.seed_files.emplace_back(std::to_string(s), f.string());
        claimed.insert(f);
      }
      runs.push_back(std::move(run));
    }
    std::vector<fs::path> orphans;
    for (const auto& p : loose) {
      if (!claimed.count(p)) orphans.push_back(p);
    }
    if (!orphans.empty()) {
      if (!opt.env) throw ConfigError("metrics without a manifest need --env", "env");
      EvalRun run;
      run.name = "unmanaged";
      run.env = make_env(*opt.env).name;
      run.variant = "unknown";
      run.refs = reference_returns(make_env(*opt.env), kReferenceEpisodes, kReferenceSeed);
      for (const auto& p : orphans) {
        run.seed_files.emplace_back(fs::relative(p.parent_path(), opt.metrics_dir).generic_string(), p.string());
      }
      runs.push_back(std::move(run));
    }
    if (runs.empty()) throw Error("no metrics files under '" + opt.metrics_dir + "'");

    std::ostringstream csv;
    csv << "run,env,variant,seed,final_return,return_auc,normalized_score,optimality_gap\n";
    for (const auto& run : runs) {
      double sum_ret = 0.0, sum_auc = 0.0, sum_gap = 0.0;
      for (const auto& [label, path] : run.seed_files) {
        std::ifstream f(path);
        if (!f) throw Error("missing metrics file '" + path + "'");
        const auto rows = read_metrics_csv(f);
        if (rows.empty()) throw Error("'" + path + "' has no episodes");
        const double ret = final_return(rows, opt.final_episodes);
        const double auc = return_auc(rows);
        const double norm = normalized_score(ret, run.refs);
        const double gap = optimality_gap(norm);
        sum_ret += ret;
        sum_auc += auc;
        sum_gap += gap;
        csv << run.name << ',' << run.env << ',' << run.variant << ',' << label << ','
            << format_double(ret) << ',' << format_double(auc) << ',' << format_double(norm) << ','
            << format_double(gap) << '\n';
      }
      const double k = static_cast<double>(run.seed_files.size());
      const double mean_ret = sum_ret / k;
      csv << run.name << ',' << run.env << ',' << run.variant << ",mean," << format_double(mean_ret)
          << ',' << format_double(sum_auc / k) << ','
          << format_double(normalized_score(mean_ret, run.refs)) << ',' << format_double(sum_gap / k)
          << '\n';
    }
    if (opt.out_path) {
      write_file(*opt.out_path, csv.str());
    } else {
      out << csv.str();
    }
  });
}

// ---------------------------------------------------------------- collect

int cmd_collect(const CollectOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.n < 0) throw ConfigError("n must be non-negative", "n");
    check_output(opt.out_path, opt.overwrite);
    const EnvSpec env = make_env(opt.env);
    const auto rows = collect_random(env, static_cast<std::size_t>(opt.n), opt.seed);
    save_transitions(opt.out_path, rows);
    if (load_transitions(opt.out_path).size() != rows.size()) throw Error("transitions did not round-trip");
    out << "wrote " << rows.size() << " transitions from " << env.name << "\n";
  });
}

}  // namespace cip::cli
