#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ibflow/cli.hpp"
#include "ibflow/dataset.hpp"

using namespace ibflow;

namespace {

int run(std::vector<std::string> args) {
    std::vector<const char*> argv;
    argv.push_back("ibflow");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

// Small end-to-end configuration: coarse 16x8 window, factor-4 reduction,
// short horizon.
const char* kSmokeConfig = R"(
fluid.rho = 1.0
fluid.nu = 0.01
fluid.u_inf = 1.0
cylinder.diameter = 1.0
cylinder.x = 1.5
cylinder.y = 1.5
cylinder.markers = 16

domain.lx = 6.0
domain.ly = 3.0
window.x0 = 0.5
window.y0 = 0.5
window.width = 3.2
window.height = 2.0

fine.box_half = 0.8
fine.h_box = 0.05
fine.h_window = 0.05
fine.h_cap = 0.25
fine.stretch = 1.05

coarse.nx = 16
coarse.ny = 10

solver.dt = 0.02
solver.t_end = 5.0
solver.output_every = 25
solver.perturb_amp = 0.05

case.kind = stationary
case.re = 100

model.n_substeps = 20
model.ib_iters = 5
model.dt_learn = 0.5
model.factor = 4
model.hidden = 8,8

train.epochs = 2
train.batch = 4
train.val_fraction = 0.2
rollout.steps = 5
)";

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string operator/(const std::string& s) const { return (path / s).string(); }
};

} // namespace

TEST_CASE("missing config path yields a nonzero exit with usage text") {
    CHECK(run({"gen-data", "--out", "x.ibds"}) == 2);
    CHECK(run({}) == 2);
    CHECK(run({"no-such-command"}) == 2);
}

TEST_CASE("nonexistent config file is a config error") {
    CHECK(run({"gen-data", "--config", "/nonexistent.cfg", "--out", "x.ibds"}) == 2);
}

TEST_CASE("gen-data, train, rollout, export complete end to end") {
    TempDir dir("ibflow_cli_smoke");
    const std::string cfg = dir / "smoke.cfg";
    {
        std::ofstream os(cfg);
        os << kSmokeConfig;
    }
    const std::string data = dir / "truth.ibds";
    REQUIRE(run({"gen-data", "--config", cfg, "--out", data}) == 0);

    const SnapshotDataset ds = read_dataset(data);
    CHECK(ds.snaps.size() == 11);  // k = 0 plus 250/25 emitted snapshots
    CHECK(ds.snaps.front().k == 0);
    CHECK(ds.snaps.back().k == 10);
    CHECK(std::filesystem::exists(data + ".manifest.json"));
    CHECK(std::filesystem::exists(data + ".forces.csv"));

    const std::string ckpt = dir / "model.ibck";
    REQUIRE(run({"train", "--config", cfg, "--model", "hybrid", "--data", data, "--out", ckpt,
                 "--set", "bench.train_window_tstar=5.0"}) == 0);
    CHECK(std::filesystem::exists(ckpt));
    CHECK(std::filesystem::exists(ckpt + ".train_log.csv"));

    const std::string rdir = dir / "rollout";
    REQUIRE(run({"rollout", "--config", cfg, "--checkpoint", ckpt, "--truth", data, "--steps",
                 "5", "--out", rdir}) == 0);
    CHECK(std::filesystem::exists(rdir + "/hybrid_errors.csv"));
    CHECK(std::filesystem::exists(rdir + "/hybrid_pred.ibds"));

    const std::string edir = dir / "export";
    REQUIRE(run({"export", "--truth", data, "--pred", rdir + "/hybrid_pred.ibds", "--out", edir,
                 "--frames", "0", "--frames", "3"}) == 0);
    CHECK(std::filesystem::exists(edir + "/errors.csv"));
    CHECK(std::filesystem::exists(edir + "/forces.csv"));
    CHECK(std::filesystem::exists(edir + "/pred_k3.pgm"));
    CHECK(std::filesystem::exists(edir + "/truth_k0.pgm"));
}

TEST_CASE("rollout with the coarse baseline works from the same dataset") {
    TempDir dir("ibflow_cli_coarse");
    const std::string cfg = dir / "smoke.cfg";
    {
        std::ofstream os(cfg);
        os << kSmokeConfig;
    }
    const std::string data = dir / "truth.ibds";
    REQUIRE(run({"gen-data", "--config", cfg, "--out", data}) == 0);
    const std::string rdir = dir / "rollout";
    CHECK(run({"rollout", "--config", cfg, "--checkpoint", "coarse", "--truth", data, "--steps",
               "3", "--out", rdir}) == 0);
    CHECK(std::filesystem::exists(rdir + "/coarse_errors.csv"));
}
