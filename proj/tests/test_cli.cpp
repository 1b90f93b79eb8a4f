#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "motif/rfnet.hpp"
#include "motif/util.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(MOTIF_CLI_PATH) + " " + args + " 2>&1";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.output.append(buf.data(), n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path work_dir() {
  static fs::path dir = [] {
    auto d = fs::temp_directory_path() / "motif_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// one small dataset shared across cases (ordered by doctest declaration order)
fs::path dataset_path() { return work_dir() / "ds.bin"; }

}  // namespace

TEST_CASE("no subcommand is a usage error") {
  auto r = run("");
  CHECK(r.exit_code == 2);
}

TEST_CASE("dataset gen: generates, prints stats, deterministic bytes") {
  auto a = run("dataset gen --template 1to1 --samples 80 --seed 5 --points 40 --fstep 0.25 "
               "--out " + q(dataset_path()));
  CAPTURE(a.output);
  REQUIRE(a.exit_code == 0);
  CHECK(a.output.find("samples: 80") != std::string::npos);
  CHECK(a.output.find("rejection_rate:") != std::string::npos);
  CHECK(a.output.find("wall_seconds:") != std::string::npos);
  CHECK(fs::exists(dataset_path()));
  CHECK(fs::exists(dataset_path().string() + ".config"));

  auto b = run("dataset gen --template 1to1 --samples 80 --seed 5 --points 40 --fstep 0.25 "
               "--workers 3 --out " + q(work_dir() / "ds2.bin"));
  REQUIRE(b.exit_code == 0);
  CHECK(motif::fnv1a_file(dataset_path()) == motif::fnv1a_file(work_dir() / "ds2.bin"));
}

TEST_CASE("dataset gen: zero samples rejected before writing anything") {
  auto r = run("dataset gen --samples 0 --out " + q(work_dir() / "never.bin"));
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(work_dir() / "never.bin"));
}

TEST_CASE("MOTIF_WORKERS only changes scheduling, not results") {
  auto r = run("dataset gen --template 1to1 --samples 30 --seed 8 --points 40 --fstep 0.25 "
               "--out " + q(work_dir() / "dsw.bin"));
  REQUIRE(r.exit_code == 0);
  setenv("MOTIF_WORKERS", "3", 1);
  auto r2 = run("dataset gen --template 1to1 --samples 30 --seed 8 --points 40 --fstep 0.25 "
                "--out " + q(work_dir() / "dsw2.bin"));
  unsetenv("MOTIF_WORKERS");
  REQUIRE(r2.exit_code == 0);
  CHECK(motif::fnv1a_file(work_dir() / "dsw.bin") == motif::fnv1a_file(work_dir() / "dsw2.bin"));
}

TEST_CASE("transfer: divisibility guard names both numbers") {
  auto r = run("transfer --dataset " + q(dataset_path()) + " --nband 7 --out " +
               q(work_dir() / "xf_bad"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("7") != std::string::npos);
  CHECK(r.output.find("40") != std::string::npos);
}

TEST_CASE("transfer: visit log length and artifacts") {
  auto r = run("transfer --dataset " + q(dataset_path()) +
               " --nband 4 --titer 3 --hidden 24,24 --epochs 4 --seed 9 --out " +
               q(work_dir() / "xf"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("visits: 19") != std::string::npos);  // 1 + 2*3*(4-1)
  CHECK(fs::exists(work_dir() / "xf" / "ensemble" / "ensemble.manifest"));
  CHECK(fs::exists(work_dir() / "xf" / "resolved_config.txt"));
  std::ifstream v(work_dir() / "xf" / "visits.csv");
  std::string line;
  int rows = -1;  // header
  while (std::getline(v, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 19);
}

TEST_CASE("transfer: nband 1 logs the train equivalence") {
  auto r = run("transfer --dataset " + q(dataset_path()) +
               " --nband 1 --hidden 16 --epochs 2 --out " + q(work_dir() / "xf1"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("monolithic") != std::string::npos);
}

TEST_CASE("train: checkpoint, history, byte-identical reruns") {
  auto cmd = "train --dataset " + q(dataset_path()) +
             " --hidden 24,24 --epochs 6 --seed 9 --out ";
  auto a = run(cmd + q(work_dir() / "tr"));
  CAPTURE(a.output);
  REQUIRE(a.exit_code == 0);
  REQUIRE(fs::exists(work_dir() / "tr" / "model.motifmodel"));
  CHECK(fs::exists(work_dir() / "tr" / "loss_history.csv"));
  auto b = run(cmd + q(work_dir() / "tr_b"));
  REQUIRE(b.exit_code == 0);
  CHECK(motif::fnv1a_file(work_dir() / "tr" / "model.motifmodel") ==
        motif::fnv1a_file(work_dir() / "tr_b" / "model.motifmodel"));
}

TEST_CASE("eval: reports, svg, baseline comparison") {
  auto r = run("eval --dataset " + q(dataset_path()) + " --checkpoint " +
               q(work_dir() / "xf" / "ensemble") + " --baseline " +
               q(work_dir() / "tr" / "model.motifmodel") + " --seed 9 --out " +
               q(work_dir() / "ev"));
  CAPTURE(r.output);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("mae_avg_2srf_improvement_pct:") != std::string::npos);
  for (const char* f : {"mae_curve.csv", "summary.txt", "mae_freq.svg", "resolved_config.txt"})
    CHECK(fs::exists(work_dir() / "ev" / f));
}

TEST_CASE("eval: missing checkpoint is an actionable usage error") {
  auto r = run("eval --dataset " + q(dataset_path()) + " --checkpoint " +
               q(work_dir() / "no_such_ckpt") + " --out " + q(work_dir() / "ev2"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("export touchstone round-trips through the parser") {
  const auto out = work_dir() / "s1.s4p";
  auto r = run("export touchstone --dataset " + q(dataset_path()) + " --index 1 --out " + q(out));
  REQUIRE(r.exit_code == 0);
  auto t = motif::rfnet::touchstone_read(out);
  CHECK(t.grid.points == 40);
  CHECK(t.grid.f_step_ghz == doctest::Approx(0.25));

  auto bad = run("export touchstone --dataset " + q(dataset_path()) + " --index 99 --out " +
                 q(work_dir() / "s99.s4p"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("out of range") != std::string::npos);
}

TEST_CASE("invdesign: config file, flag override, exit codes") {
  {
    std::ofstream cfg(work_dir() / "inv.cfg");
    cfg << "# matching task\n"
        << "template=1to1\n"
        << "fc=5\n"
        << "bw=2\n"
        << "z01=\"60,-10\"\n"
        << "z02=90,20\n"
        << "evals=400\n";
  }
  auto r = run("invdesign --ensemble " + q(work_dir() / "xf" / "ensemble") + " --config " +
               q(work_dir() / "inv.cfg") + " --seed 3 --out " + q(work_dir() / "inv"));
  CAPTURE(r.output);
  CHECK((r.exit_code == 0 || r.exit_code == 4));  // feasibility depends on the tiny surrogate
  for (const char* f : {"report.txt", "curves.csv", "verified.s4p", "gamma.svg", "loss.svg",
                        "resolved_config.txt"})
    CHECK(fs::exists(work_dir() / "inv" / f));
  // flags override file keys in the snapshot
  auto r2 = run("invdesign --ensemble " + q(work_dir() / "xf" / "ensemble") + " --config " +
                q(work_dir() / "inv.cfg") + " --evals 150 --seed 3 --out " +
                q(work_dir() / "inv_ov"));
  CHECK((r2.exit_code == 0 || r2.exit_code == 4));
  std::ifstream snap(work_dir() / "inv_ov" / "resolved_config.txt");
  std::string text((std::istreambuf_iterator<char>(snap)), std::istreambuf_iterator<char>());
  CHECK(text.find("evals=150") != std::string::npos);
  CHECK(text.find("fc=5") != std::string::npos);

  auto bad = run("invdesign --ensemble " + q(work_dir() / "xf" / "ensemble") +
                 " --z01 40-50j --fc 5 --bw 2 --out " + q(work_dir() / "inv_bad"));
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("re,im") != std::string::npos);

  auto oob = run("invdesign --ensemble " + q(work_dir() / "xf" / "ensemble") +
                 " --fc 500 --out " + q(work_dir() / "inv_oob"));
  CHECK(oob.exit_code == 2);

  std::ofstream(work_dir() / "bad.cfg") << "bogus_key=1\n";
  auto unk = run("invdesign --ensemble " + q(work_dir() / "xf" / "ensemble") + " --config " +
                 q(work_dir() / "bad.cfg") + " --out " + q(work_dir() / "inv_unk"));
  CHECK(unk.exit_code == 2);
  CHECK(unk.output.find("bogus_key") != std::string::npos);
}

TEST_CASE("cleanup") { fs::remove_all(work_dir()); }
