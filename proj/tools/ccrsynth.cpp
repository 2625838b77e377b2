// ccrsynth: synthesize synchronization for finite-state concurrent programs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ccrsynth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ccrsynth;

namespace {

void write_artifacts(const std::string& dir, const std::map<std::string, std::string>& files) {
  fs::create_directories(dir);
  for (const auto& [name, text] : files) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + (fs::path(dir) / name).string());
    out << text;
  }
}

int report_error(const std::string& stage, const Error& e) {
  std::cerr << "ccrsynth: " << stage << ": " << e.what() << "\n";
  return exit_code_for(e.code());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesis of synchronization from temporal specifications"};
  app.require_subcommand(1);

  std::string program_path, spec_path, out_dir = "ccrsynth-out";
  std::string mode = "all-init", target = "ccr", observability = "auto", granularity = "coarse";
  size_t budget = 0;
  int jobs = 1;
  bool dump_tableau = false, dump_model = false, no_guards = false;

  auto* synth = app.add_subcommand("synth", "synthesize a synchronized program");
  synth->add_option("program", program_path, "program (.cp)")->required();
  synth->add_option("spec", spec_path, "specification (.lctl)")->required();
  synth->add_option("--mode", mode, "initial values")->check(CLI::IsMember({"all-init", "with-inputs"}));
  synth->add_option("--target", target, "output level")->check(CLI::IsMember({"ccr", "coarse", "fine"}));
  synth->add_option("--observability", observability, "guard projection")
      ->check(CLI::IsMember({"auto", "force-shared", "limited"}));
  synth->add_option("--node-budget", budget, "tableau node limit (default: $CCRSYNTH_NODE_BUDGET or 500000)");
  synth->add_option("--jobs,-j", jobs, "parallel per-valuation runs")->check(CLI::PositiveNumber);
  synth->add_option("--out,-o", out_dir, "artifact directory");
  synth->add_flag("--dump-tableau", dump_tableau, "write tableau JSON/DOT");
  synth->add_flag("--dump-model", dump_model, "write model JSON/DOT");
  synth->add_flag("--no-guards", no_guards, "skip guards.json");

  auto* check = app.add_subcommand("check", "model-check a program against a specification");
  check->add_option("program", program_path, "program (.cp)")->required();
  check->add_option("spec", spec_path, "specification (.lctl)")->required();

  auto* sim = app.add_subcommand("simulate", "compile a CCR program to locks and explore it exhaustively");
  sim->add_option("program", program_path, "CCR program (.cp)")->required();
  sim->add_option("spec", spec_path, "specification (.lctl)")->required();
  sim->add_option("--granularity", granularity, "lock granularity")->check(CLI::IsMember({"coarse", "fine"}));
  sim->add_option("--out,-o", out_dir, "write .sync files and the lock plan here");

  auto* dump = app.add_subcommand("dump-phi", "print the formula describing a program's semantics");
  dump->add_option("program", program_path, "program (.cp)")->required();
  dump->add_option("--mode", mode, "initial values")->check(CLI::IsMember({"all-init", "with-inputs"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitOther;
  }

  std::string stage = "read";
  try {
    if (*synth) {
      PipelineConfig cfg;
      cfg.mode = mode == "with-inputs" ? InitMode::WithInputs : InitMode::AllInitialized;
      cfg.target = target == "coarse" ? Target::Coarse : target == "fine" ? Target::Fine : Target::Ccr;
      cfg.observability = observability == "limited"        ? ObservabilityMode::Limited
                          : observability == "force-shared" ? ObservabilityMode::ForceShared
                                                            : ObservabilityMode::Auto;
      cfg.node_budget = budget ? budget : default_node_budget();
      cfg.jobs = jobs;
      cfg.dump_tableau = dump_tableau;
      cfg.dump_model = dump_model;
      cfg.dump_guards = !no_guards;
      auto res = run_pipeline(read_file(program_path), read_file(spec_path), cfg);
      for (const auto& n : res.notices) std::cerr << "note: " << n << "\n";
      write_artifacts(out_dir, res.artifacts);
      if (res.exit_code != kExitOk) {
        std::cerr << "ccrsynth: " << res.stage << ": " << res.message << "\n";
        return res.exit_code;
      }
      const auto& v = res.report["verification"];
      std::cout << "CCR program: " << v["ccr"].get<std::string>() << " (" << v["ccr_states"].get<size_t>() << " states)\n";
      if (v.contains("lock_program")) std::cout << target << " lock program: " << v["lock_program"].get<std::string>() << "\n";
      for (const auto& w : res.synthesized->warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "artifacts written to " << out_dir << "\n";
      return kExitOk;
    }
    if (*check) {
      std::string prog_text = read_file(program_path), spec_text = read_file(spec_path);
      stage = "parse";
      auto p = parse_program(prog_text);
      stage = "check";
      auto r = verify_only(p, spec_text);
      std::cout << r.text << "\n";
      return r.pass ? kExitOk : kExitVerify;
    }
    if (*sim) {
      std::string prog_text = read_file(program_path), spec_text = read_file(spec_path);
      stage = "parse";
      auto p = parse_program(prog_text);
      FormulaStore f(p.symbols, p.num_processes());
      FId spec = parse_spec(spec_text, f);
      stage = "codegen";
      auto c = granularity == "fine" ? compile_fine(p) : compile_coarse(p);
      auto disc = check_lock_discipline(c);
      stage = "simulate";
      auto r = check_compiled(c, f, spec, initial_valuations(p, InitMode::WithInputs));
      std::cout << "lock discipline: " << (disc ? *disc : "ok") << "\n";
      std::cout << "micro states: " << r.micro_states << ", valuations: " << r.projected_states << "\n";
      std::cout << "deadlock-free: " << (r.deadlock_free ? "yes" : "no") << "\n";
      std::cout << "specification: " << (r.spec_holds ? "PASS" : "FAIL") << "\n";
      std::cout << "reachable states match CCR program: " << (r.same_states ? "yes" : "no") << "\n";
      if (!r.detail.empty()) std::cout << r.detail << "\n";
      if (sim->count("--out")) {
        std::map<std::string, std::string> files;
        for (const auto& ep : c.processes) files[ep.name + ".sync"] = ep.text;
        files["lockplan.json"] = to_json(c).dump(1) + "\n";
        write_artifacts(out_dir, files);
      }
      return r.deadlock_free && r.spec_holds && !disc ? kExitOk : kExitVerify;
    }
    if (*dump) {
      std::string prog_text = read_file(program_path);
      stage = "parse";
      auto p = parse_program(prog_text);
      FormulaStore f(p.symbols, p.num_processes());
      stage = "dump-phi";
      auto phi = generate_phi_p(p, f, mode == "with-inputs" ? InitMode::WithInputs : InitMode::AllInitialized);
      std::cout << dump_phi(p, f, phi);
      return kExitOk;
    }
  } catch (const Error& e) {
    return report_error(stage, e);
  } catch (const std::exception& e) {
    std::cerr << "ccrsynth: " << stage << ": " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
