// Command-line driver: attack, ablate, verify.
// Exit codes: 0 success, 1 usage or config error, 2 attack below threshold,
// 3 verification failure.

#include "zoa/config.hpp"
#include "zoa/png_export.hpp"
#include "zoa/probes.hpp"
#include "zoa/vector_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "zoa 1.0.0";

enum Exit : int { kOk = 0, kUsage = 1, kAttackFailed = 2, kVerifyFailed = 3 };

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw zoa::Error("cannot write " + path.string());
  f << text;
}

// "gen:K" selects generated suite input K; anything else is a .zgv path.
zoa::Vec load_input(const zoa::ExperimentConfig& cfg, const std::string& spec) {
  if (spec.rfind("gen:", 0) == 0) return zoa::suite_input(cfg, zoa::detail::parse_u64(spec.substr(4)));
  return zoa::io::read_zgv(spec);
}

std::string manifest_header(const zoa::ExperimentConfig& cfg, std::uint64_t seed) {
  std::ostringstream os;
  os << "version = " << kVersion << '\n'
     << "timestamp = " << utc_timestamp() << '\n'
     << "config_hash = " << hex64(zoa::config_hash(cfg)) << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

struct AttackArgs {
  std::string config;
  std::string input = "gen:0";
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  bool export_png = true;
};

int cmd_attack(const AttackArgs& args) {
  zoa::ExperimentConfig cfg = zoa::load_config(args.config);
  if (args.seed) cfg.attack.seed = *args.seed;
  const zoa::SyntheticTranslator oracle = zoa::build_synthetic(cfg.oracle);
  const zoa::SurrogateModel surrogate =
      zoa::make_surrogate(oracle, cfg.attack.surrogate_scale, zoa::mix_seed(cfg.oracle.seed, 17));
  const zoa::Vec x0 = load_input(cfg, args.input);

  const zoa::AttackOutcome out = zoa::run_attack(oracle, x0, cfg.attack, &surrogate);
  const zoa::AttackResult& r = out.result;

  const fs::path dir(args.out);
  fs::create_directories(dir / "vectors");
  {
    std::ofstream f(dir / "trace.rows", std::ios::binary);
    zoa::write_trace(f, out.trace);
  }
  const zoa::Vec adv_output = oracle.evaluate(r.x_adv); // export only, not part of the run
  zoa::io::write_zgv((dir / "vectors" / "x0.zgv").string(), x0);
  zoa::io::write_zgv((dir / "vectors" / "x_adv.zgv").string(), r.x_adv);
  zoa::io::write_zgv((dir / "vectors" / "y0.zgv").string(), r.y0);
  zoa::io::write_zgv((dir / "vectors" / "t_adv.zgv").string(), adv_output);
  std::vector<std::string> artifacts{"trace.rows", "vectors/x0.zgv", "vectors/x_adv.zgv", "vectors/y0.zgv",
                                     "vectors/t_adv.zgv"};
  if (args.export_png) {
    if (x0.size() != cfg.oracle.shape.size()) throw zoa::Error("input does not match the oracle image shape");
    fs::create_directories(dir / "exports");
    const std::pair<const char*, const zoa::Vec*> panels[] = {
        {"x0", &x0}, {"x_adv", &r.x_adv}, {"y0", &r.y0}, {"t_adv", &adv_output}};
    for (const auto& [name, v] : panels) {
      zoa::io::write_png((dir / "exports" / (std::string(name) + ".png")).string(), *v, cfg.oracle.shape);
      artifacts.push_back(std::string("exports/") + name + ".png");
    }
  }

  std::ostringstream m;
  m << manifest_header(cfg, cfg.attack.seed) << "command = attack\n"
    << "input = " << args.input << '\n'
    << "variant = " << zoa::to_string(cfg.attack.variant) << '\n'
    << "success = " << (r.success ? "true" : "false") << '\n'
    << "final_score = " << zoa::detail::fmt_double(r.final_score) << '\n'
    << "best_score = " << zoa::detail::fmt_double(r.best_score) << '\n'
    << "queries = " << r.queries << '\n'
    << "iterations = " << r.iterations << '\n'
    << "stop_reason = " << r.stop_reason << '\n';
  for (const std::string& a : artifacts) m << "artifact = " << a << '\n';
  m << "\n# effective config\n" << zoa::serialize_config(cfg);
  write_text(dir / "manifest.txt", m.str());

  std::printf("%s score=%.4f queries=%llu iterations=%llu\n", r.success ? "success" : "failure", r.final_score,
              static_cast<unsigned long long>(r.queries), static_cast<unsigned long long>(r.iterations));
  return r.success ? kOk : kAttackFailed;
}

struct AblateArgs {
  std::string config;
  std::string out = "ablation";
  std::optional<std::uint64_t> seed;
  unsigned parallel = std::max(1u, std::thread::hardware_concurrency());
};

int cmd_ablate(const AblateArgs& args) {
  zoa::ExperimentConfig cfg = zoa::load_config(args.config);
  if (args.seed) cfg.attack.seed = *args.seed;
  const zoa::SuiteResult res = zoa::run_suite(zoa::make_suite(cfg, args.parallel));

  const fs::path dir(args.out);
  fs::create_directories(dir / "traces");
  std::ostringstream m;
  m << manifest_header(cfg, cfg.attack.seed) << "command = ablate\n" << "artifact = summary.rows\n";
  std::ostringstream runs;
  runs << "run_id\tinput\tvariant\treplication\tseed\tsuccess\tqueries\tfinal_score\terror\n";
  for (const zoa::RunRecord& rec : res.runs) {
    char name[96];
    std::snprintf(name, sizeof name, "traces/run%04zu.rows", rec.spec.run_id);
    {
      std::ofstream f(dir / name, std::ios::binary);
      zoa::write_trace(f, rec.outcome.trace);
    }
    m << "artifact = " << name << '\n';
    const zoa::AttackResult& r = rec.outcome.result;
    runs << rec.spec.run_id << '\t' << rec.spec.input_index << '\t' << zoa::to_string(rec.spec.variant) << '\t'
         << rec.spec.replication << '\t' << rec.spec.seed << '\t' << (rec.error.empty() && r.success) << '\t'
         << r.queries << '\t' << zoa::detail::fmt_double(r.final_score) << '\t' << rec.error << '\n';
    if (!rec.error.empty())
      std::fprintf(stderr, "run %zu (%s) failed: %s\n", rec.spec.run_id, std::string(zoa::to_string(rec.spec.variant)).c_str(),
                   rec.error.c_str());
  }
  m << "artifact = runs.rows\n\n# effective config\n" << zoa::serialize_config(cfg);
  write_text(dir / "runs.rows", runs.str());
  {
    std::ofstream f(dir / "summary.rows", std::ios::binary);
    zoa::write_summary(f, res.rows, '\t');
  }
  write_text(dir / "manifest.txt", m.str());
  zoa::write_summary(std::cout, res.rows, '\t');
  return kOk;
}

int cmd_verify(const std::string& level, bool disable_projection, std::uint64_t seed) {
  zoa::ProbeOptions opts;
  opts.disable_projection = disable_projection;
  const zoa::VerifyLevel lv = level == "full" ? zoa::VerifyLevel::full() : zoa::VerifyLevel::fast();
  const auto start = std::chrono::steady_clock::now();
  const zoa::ProbeReport report = zoa::run_verification(lv, opts, seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  zoa::write_report(std::cout, report);
  std::printf("%s: %zu checks, %.1f s\n", report.passed() ? "verify passed" : "verify FAILED", report.checks.size(),
              secs);
  return report.passed() ? kOk : kVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zeroth-order nullifying attacks on synthetic image translators"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  AttackArgs attack;
  std::uint64_t attack_seed = 0;
  auto* a = app.add_subcommand("attack", "Run one attack and persist its artifacts");
  a->add_option("--config", attack.config, "Config file")->required();
  a->add_option("--input", attack.input, "gen:K for generated input K, or a .zgv path");
  auto* a_seed = a->add_option("--seed", attack_seed, "Override the attack seed");
  a->add_option("--out", attack.out, "Output directory");
  a->add_option("--export-png", attack.export_png, "Write PNG panels (true/false)");

  AblateArgs ablate;
  std::uint64_t ablate_seed = 0;
  auto* b = app.add_subcommand("ablate", "Run the variant sweep and print the summary table");
  b->add_option("--config", ablate.config, "Config file")->required();
  auto* b_seed = b->add_option("--seed", ablate_seed, "Override the attack seed");
  b->add_option("--out", ablate.out, "Output directory");
  b->add_option("--parallel", ablate.parallel, "Concurrent runs")->check(CLI::PositiveNumber);

  std::string level = "fast";
  bool disable_projection = false;
  std::uint64_t verify_seed = 7;
  auto* v = app.add_subcommand("verify", "Run the randomized verification suites");
  v->add_option("level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  v->add_option("--seed", verify_seed, "Probe seed");
  v->add_flag("--disable-projection", disable_projection)->group(""); // mutation hook for tests

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*a) {
      if (*a_seed) attack.seed = attack_seed;
      return cmd_attack(attack);
    }
    if (*b) {
      if (*b_seed) ablate.seed = ablate_seed;
      return cmd_ablate(ablate);
    }
    return cmd_verify(level, disable_projection, verify_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
}
