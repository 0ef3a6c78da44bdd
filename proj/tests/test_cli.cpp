#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <string>

#include "hf/io.hpp"

namespace {

const std::string kBin = std::string(HF_BINARY_DIR) + "/hawkes-field";
const std::string kCfg = std::string(HF_SOURCE_DIR) + "/configs/";

int run(const std::string& args) {
    const int rc = std::system((kBin + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

std::string tmpdir(const char* leaf) {
    const auto dir = std::filesystem::temp_directory_path() / "hf_cli" / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace

TEST_CASE("simulate writes an event log with sidecar") {
    const std::string out = tmpdir("sim");
    CHECK(run("simulate --config " + kCfg + "sigmoid_mexhat.cfg --n 16 --horizon 1 --seed 4 --out " + out) == 0);
    CHECK(std::filesystem::exists(out + "/events.csv"));
    CHECK(hf::read_text_file(out + "/events.meta").find("params-hash") != std::string::npos);
}

TEST_CASE("nfe solves with both methods and keeps its default grid") {
    const std::string out = tmpdir("nfe");
    CHECK(run("nfe --config " + kCfg + "sigmoid_mexhat.cfg --method picard --out " + out) == 0);
    CHECK(run("nfe --config " + kCfg + "sigmoid_mexhat.cfg --method euler --grid-space 16 --grid-time 32 --out " + out) == 0);
    CHECK(std::filesystem::exists(out + "/field.csv"));
}

TEST_CASE("identities subcommand exits 0 on the registered config") {
    // the default G = 256 grid is part of the contract: the decomposition
    // residual scales like dx^4 and already misses 1e-9 at G = 128
    const std::string out = tmpdir("ident");
    CHECK(run("identities --config " + kCfg + "sigmoid_mexhat.cfg --seed 3 --out " + out) == 0);
    CHECK(hf::read_text_file(out + "/identities_summary.json").find("\"pass\": true") != std::string::npos);
}

TEST_CASE("rate sweeps exit 0 and write csv plus summary") {
    const std::string out = tmpdir("conv");
    CHECK(run("snfe-converge --config " + kCfg + "sigmoid_mexhat.cfg --n-list 4 16 64 256 "
              "--replicas 60 --grid-space 32 --grid-time 128 --seed 2 --out " + out) == 0);
    CHECK(hf::read_text_file(out + "/snfe_converge.csv").find("n,replica,sup_sq_error") != std::string::npos);
}

TEST_CASE("operational errors exit 1") {
    CHECK(run("nfe --config /nonexistent.cfg --out /tmp/hf_cli/none") == 1);
    const std::string bad = tmpdir("bad");
    {
        std::ofstream f(bad + "/bad.cfg");
        f << "rate.kind = sigmoid\nrate.f0 = 1\nrate.kappa = 0\nmystery = 1\n"
             "kernel.kind = constant\nkernel.c = 0\nu0.kind = constant\nu0.a = 0\nalpha = 1\n";
    }
    CHECK(run("nfe --config " + bad + "/bad.cfg --out " + bad) == 1);
}
