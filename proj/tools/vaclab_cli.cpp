#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "vaclab/parallel.hpp"
#include "vaclab/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_bundle(const vaclab::Report& r, const fs::path& dir) {
  for (const auto& [name, content] : r.files) write_file(dir / name, content);
  if (!r.diagnostics.empty()) {
    std::string d;
    for (const auto& line : r.diagnostics) d += line + "\n";
    write_file(dir / "diagnostics.txt", d);
  }
}

void print_criteria(const std::string& scenario, const json& criteria, std::ostream& os) {
  for (const auto& c : criteria) {
    os << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << scenario << ' ' << c.at("name").get<std::string>()
       << " value=" << c.at("value").dump() << " tolerance=" << c.at("tolerance").dump() << '\n';
  }
}

bool finish(const vaclab::Report& r, const fs::path& dir) {
  write_bundle(r, dir);
  print_criteria(r.scenario, r.summary().at("criteria"), std::cout);
  for (const auto& d : r.diagnostics) std::cerr << r.scenario << ": " << d << '\n';
  return r.passed();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for continuity and transport equations with vacuum"};
  app.require_subcommand(1);
  std::string out = "out";
  int seed = 0;
  int threads = 0;
  bool dump = false;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Seed for randomized property checks")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads (0 = hardware)")->capture_default_str();
  app.add_flag("--dump-fields", dump, "Write binary field snapshots");

  std::vector<std::string> run_configs;
  auto* run = app.add_subcommand("run", "Run one or more scenarios");
  run->add_option("config", run_configs, "Scenario files")->required()->check(CLI::ExistingFile);

  std::string config;
  auto* verify = app.add_subcommand("verify-hypotheses", "Evaluate the theorem hypotheses of a scenario");
  verify->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("commutator-sweep", "Run only the commutator analyses of a scenario");
  sweep->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);

  int levels = 3;
  auto* conv = app.add_subcommand("converge", "Refinement study of the error criteria");
  conv->add_option("config", config, "Scenario file")->required()->check(CLI::ExistingFile);
  conv->add_option("--levels", levels, "Number of refinement levels")->capture_default_str()->check(CLI::Range(2, 8));

  std::string bundle;
  auto* report = app.add_subcommand("report", "Summarize an output bundle");
  report->add_option("bundle", bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  (void)seed;
  vaclab::set_thread_count(threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  const vaclab::RunOptions opts{dump};

  try {
    if (*run) {
      std::vector<vaclab::Scenario> scenarios;
      for (const auto& path : run_configs) scenarios.push_back(vaclab::parse_config(read_file(path)));
      std::vector<vaclab::Report> reports(scenarios.size());
      std::vector<std::string> errors(scenarios.size());
      std::vector<std::thread> workers;
      for (std::size_t i = 0; i < scenarios.size(); ++i) {
        workers.emplace_back([&, i] {
          try {
            reports[i] = vaclab::run_scenario(scenarios[i], opts);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        });
      }
      for (auto& w : workers) w.join();
      bool ok = true;
      for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (!errors[i].empty()) {
          std::cerr << scenarios[i].name << ": " << errors[i] << '\n';
          ok = false;
          continue;
        }
        const fs::path dir = scenarios.size() == 1 ? fs::path(out) : fs::path(out) / scenarios[i].name;
        ok = finish(reports[i], dir) && ok;
      }
      return ok ? 0 : 1;
    }
    if (*verify) {
      const vaclab::Scenario s = vaclab::parse_config(read_file(config), false);
      if (!s.hypotheses) {
        std::cout << "no theorem checks requested\n";
        return 0;
      }
      bool ok = true;
      for (const auto& v : vaclab::evaluate_hypotheses(s)) {
        std::cout << (v.verdict ? "ACCEPT " : "REJECT ") << v.check;
        if (!v.verdict) std::cout << ": " << v.verdict.reason;
        std::cout << '\n';
        ok = ok && static_cast<bool>(v.verdict);
      }
      return ok ? 0 : 1;
    }
    if (*sweep) {
      vaclab::Scenario s = vaclab::parse_config(read_file(config));
      std::erase_if(s.analyses, [](const vaclab::AnalysisSpec& a) { return a.type != "commutator_sweep"; });
      if (s.analyses.empty()) {
        for (const auto& f : s.fields) {
          s.analyses.push_back({"commutator_sweep", json{{"field", f.name}}, "analyses[default]"});
        }
      }
      return finish(vaclab::run_scenario(s, opts), out) ? 0 : 1;
    }
    if (*conv) {
      const vaclab::Scenario s = vaclab::parse_config(read_file(config));
      const vaclab::ConvergeReport r = vaclab::converge(s, levels);
      write_file(fs::path(out) / "converge.json", r.to_json().dump(2) + "\n");
      write_file(fs::path(out) / "converge.csv", r.csv());
      for (const auto& row : r.rows) {
        std::cout << (row.first_order ? "PASS " : "FAIL ") << row.name << " values=" << json(row.values).dump()
                  << " ratios=" << json(row.ratios).dump() << '\n';
      }
      return r.passed() ? 0 : 1;
    }
    if (*report) {
      const json summary = json::parse(read_file((fs::path(bundle) / "summary.json").string()));
      print_criteria(summary.at("scenario").get<std::string>(), summary.at("criteria"), std::cout);
      bool ok = true;
      for (const auto& c : summary.at("criteria")) ok = ok && c.at("pass").get<bool>();
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
