#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "bfgd/harness.hpp"
#include "bfgd/linalg.hpp"
#include "bfgd/pgm.hpp"
#include "bfgd/rng.hpp"
#include "test_support.hpp"

using namespace bfgd;
using namespace bfgd::testing;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("harness");

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "bfgd_harness_tests";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << content;
}

}  // namespace

TEST_CASE("sensing instances: unit norm, exact rank, realizable, reproducible") {
    const SensingInstance a = gen_sensing_instance(12, 10, 3, 6.0, MapKind::Gaussian, 5);
    CHECK(frobenius_norm(a.truth.x_star) == doctest::Approx(1.0).epsilon(1e-12));
    const SvdResult svd = svd_small(a.truth.x_star);
    CHECK(svd.singulars[2] > 1e-10);  // rank exactly 3
    CHECK(svd.singulars[3] <= 1e-12);
    CHECK(a.objective->value(a.truth.x_star) <= 1e-20);  // noiseless

    const SensingInstance b = gen_sensing_instance(12, 10, 3, 6.0, MapKind::Gaussian, 5);
    CHECK(a.objective->observations() == b.objective->observations());
}

TEST_CASE("one-bit instances: scaling, balanced labels at zero, calibration") {
    const OneBitInstance inst =
        gen_onebit_instance(24, 24, 2, 0.5, LinkKind::Logistic, 1.0, 0.7, 11);
    CHECK(max_abs(inst.truth.x_star) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(inst.train.size() == 288);
    CHECK(inst.heldout.size() == 288);

    // Labels at near-zero entries are coin flips: aggregate over many seeds
    // and check the plus-fraction against the link probability bands.
    std::size_t plus = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const OneBitInstance s =
            gen_onebit_instance(16, 16, 1, 1.0, LinkKind::Logistic, 1.0, 1.0, seed);
        for (std::size_t k = 0; k < s.train.size(); ++k) {
            const auto& o = s.train[k];
            const double x = s.truth.x_star(o.row, o.col);
            if (std::fabs(x) > 0.05) continue;  // keep near-zero entries only
            ++total;
            if (o.label > 0) ++plus;
        }
    }
    REQUIRE(total > 500);
    const double freq = static_cast<double>(plus) / total;
    // sigma(|x| <= 0.05) is within 0.5125 of a fair coin; 3-sigma band on top.
    const double band = 0.0125 + 3.0 * 0.5 / std::sqrt(static_cast<double>(total));
    CHECK(std::fabs(freq - 0.5) <= band);
}

TEST_CASE("probit labels match link probabilities within binomial bands") {
    std::size_t flips_plus = 0, flips_total = 0;
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        const OneBitInstance s =
            gen_onebit_instance(12, 12, 1, 1.0, LinkKind::Probit, 0.5, 1.0, seed);
        for (const auto& o : s.train) {
            const double x = s.truth.x_star(o.row, o.col);
            if (x < 0.6 || x > 0.9) continue;  // band with known probability range
            ++flips_total;
            if (o.label > 0) ++flips_plus;
        }
    }
    REQUIRE(flips_total > 200);
    const double freq = static_cast<double>(flips_plus) / flips_total;
    // Phi(0.6/0.5) = 0.885, Phi(0.9/0.5) = 0.964; allow 3-sigma slack.
    const double lo = 0.885 - 3.0 * 0.5 / std::sqrt(static_cast<double>(flips_total));
    const double hi = 0.964 + 3.0 * 0.5 / std::sqrt(static_cast<double>(flips_total));
    CHECK(freq >= lo);
    CHECK(freq <= hi);
}

TEST_CASE("pgm round-trip and mask cardinality") {
    Rng rng(13);
    DenseMatrix img(9, 7);
    for (double& v : img.data()) v = rng.uniform();
    const fs::path path = temp_dir() / "roundtrip.pgm";
    write_pgm(path.string(), img);
    const DenseMatrix back = read_pgm(path.string());
    REQUIRE(back.rows() == 9);
    REQUIRE(back.cols() == 7);
    CHECK(max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-12);  // 8-bit quantization

    const ImageInstance inst = ingest_image(path.string(), 0.35, 1);
    CHECK(inst.objective->observations().size() ==
          static_cast<std::size_t>(std::llround(0.35 * 9 * 7)));
}

TEST_CASE("ascii pgm parses with comments; malformed files are rejected") {
    const fs::path dir = temp_dir();
    write_file(dir / "ok.pgm", "P2\n# comment line\n3 2\n255\n0 128 255\n64 32 16\n");
    const DenseMatrix img = read_pgm((dir / "ok.pgm").string());
    REQUIRE(img.rows() == 2);
    REQUIRE(img.cols() == 3);
    CHECK(img(0, 1) == doctest::Approx(128.0 / 255.0));
    CHECK(img(1, 2) == doctest::Approx(16.0 / 255.0));

    write_file(dir / "bad_magic.pgm", "P7\n3 2\n255\n");
    CHECK_THROWS_AS(read_pgm((dir / "bad_magic.pgm").string()), std::runtime_error);

    write_file(dir / "truncated.pgm", std::string("P5\n4 4\n255\n\x01\x02", 12));
    try {
        read_pgm((dir / "truncated.pgm").string());
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }

    write_file(dir / "deep.pgm", "P2\n2 2\n65535\n0 1 2 3\n");
    CHECK_THROWS_AS(read_pgm((dir / "deep.pgm").string()), std::runtime_error);

    CHECK_THROWS_AS(read_pgm((dir / "missing.pgm").string()), std::runtime_error);
}

TEST_CASE("full observation with full rank reconstructs an image by svp") {
    Rng rng(17);
    DenseMatrix img(12, 12);
    for (double& v : img.data()) v = std::round(rng.uniform() * 255.0) / 255.0;
    const fs::path path = temp_dir() / "full.pgm";
    write_pgm(path.string(), img);

    const ImageInstance inst = ingest_image(path.string(), 1.0, 3);
    SolverConfig cfg;
    cfg.rank = 12;
    cfg.max_iters = 400;
    cfg.tol = 1e-9;
    const SolveResult res = svp_solve(*inst.objective, 12, 1.0 / 3.0, cfg);
    CHECK(psnr(res.x_hat, inst.reference, 1.0) >= 100.0);
}

TEST_CASE("completion of a realizable integer-valued image") {
    // Integer rank-5 pixel matrix: exactly representable in 8 bits, so the
    // masked completion problem is noiseless.
    Rng rng(19);
    DenseMatrix p(64, 5), q(64, 5);
    for (double& v : p.data()) v = static_cast<double>(rng.below(3));
    for (double& v : q.data()) v = static_cast<double>(rng.below(4));
    DenseMatrix pixels = matmul_a_bt(p, q);
    CHECK(max_abs(pixels) <= 255.0);
    for (double& v : pixels.data()) v /= 255.0;
    const SvdResult spectrum = svd_small(pixels);
    REQUIRE(spectrum.singulars[4] > 1e-8);  // genuinely rank 5
    REQUIRE(spectrum.singulars[5] <= 1e-10);

    const fs::path path = temp_dir() / "rank5.pgm";
    write_pgm(path.string(), pixels);
    const ImageInstance inst = ingest_image(path.string(), 0.35, 7);

    SolverConfig cfg;
    cfg.rank = 5;
    cfg.max_iters = 30000;
    cfg.tol = 1e-12;
    cfg.regime = Regime::StronglyConvex;
    const SolveResult res = bfgd_solve(*inst.objective, BalanceRegularizer{}, cfg, nullptr);
    CHECK(relative_error(res.x_hat, inst.reference) <= 1e-3);
}

TEST_CASE("movielens: toy binarization and holdout bookkeeping") {
    const fs::path path = temp_dir() / "toy.data";
    write_file(path, "1\t1\t5\t882000000\n1\t2\t1\t882000001\n2\t1\t4\t882000002\n"
                     "2\t3\t2\t882000003\n");
    const MovieLensData data = ingest_movielens(path.string(), 0, 1);
    CHECK(data.global_mean == doctest::Approx(3.0));
    CHECK(data.users == 2);
    CHECK(data.items == 3);
    CHECK(data.test_set.empty());
    REQUIRE(data.objective->observations().size() == 4);
    // Ratings (5,1,4,2) against mean 3 give labels (+1,-1,+1,-1).
    CHECK(data.objective->observations()[0].label == 1);
    CHECK(data.objective->observations()[1].label == -1);
    CHECK(data.objective->observations()[2].label == 1);
    CHECK(data.objective->observations()[3].label == -1);

    const MovieLensData held = ingest_movielens(path.string(), 2, 1);
    CHECK(held.test_set.size() == 2);
    CHECK(held.objective->observations().size() == 2);
}

TEST_CASE("movielens rejects malformed lines with a line number") {
    const fs::path dir = temp_dir();
    write_file(dir / "bad_rating.data", "1\t1\t5\t0\n1\t2\t9\t0\n");
    try {
        ingest_movielens((dir / "bad_rating.data").string(), 0, 0);
        FAIL("expected rejection");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    write_file(dir / "bad_fields.data", "1 1 5 0\n");
    CHECK_THROWS_AS(ingest_movielens((dir / "bad_fields.data").string(), 0, 0),
                    std::runtime_error);
    write_file(dir / "bad_id.data", "0\t1\t5\t0\n");
    CHECK_THROWS_AS(ingest_movielens((dir / "bad_id.data").string(), 0, 0),
                    std::runtime_error);
}

TEST_CASE("recoverable ratings file: held-out sign accuracy clears 0.70") {
    // Ratings generated from a planted rank-3 logistic model, written in the
    // tab-separated format and re-ingested.
    const std::size_t users = 200, items = 300;
    Rng rng(23);
    DenseMatrix u = uniform_matrix(rng, users, 3, -0.5, 0.5);
    DenseMatrix v = uniform_matrix(rng, items, 3, -0.5, 0.5);
    DenseMatrix x = matmul_a_bt(u, v);
    const double amp = 10.0 / max_abs(x);
    for (double& e : x.data()) e *= amp;

    std::ostringstream file;
    const std::vector<std::size_t> flat =
        sample_without_replacement(rng, users * items, users * items / 4);
    for (std::size_t f : flat) {
        const std::size_t i = f / items, j = f % items;
        const bool plus = rng.uniform() < detail::sigmoid(x(i, j));
        // 5 maps to +1 and 1 to -1 after binarization against the mean.
        file << (i + 1) << '\t' << (j + 1) << '\t' << (plus ? 5 : 1) << '\t' << f << '\n';
    }
    const fs::path path = temp_dir() / "synthetic.data";
    write_file(path, file.str());

    const MovieLensData data = ingest_movielens(path.string(), 1000, 29);
    REQUIRE(data.test_set.size() == 1000);

    SolverConfig cfg;
    cfg.rank = 3;
    cfg.max_iters = 2000;
    cfg.tol = 1e-7;
    cfg.regime = Regime::Smooth;
    const SolveResult res = bfgd_solve(*data.objective, std::nullopt, cfg, nullptr);
    CHECK(sign_accuracy(res.x_hat, data.test_set) >= 0.70);
}

TEST_CASE("trace csv round-trips exactly") {
    SolveTrace trace;
    TraceRecord a{1, 0.5, 0.25, 0.125, std::nullopt, 1e-3, 0.01};
    TraceRecord b{2, 1.0 / 3.0, 5e-6, std::nullopt, 0.9999999999999, 1e-4, 0.02};
    trace.push_back(a);
    trace.push_back(b);
    std::ostringstream os;
    write_trace_csv(os, trace);
    std::istringstream is(os.str());
    const SolveTrace back = read_trace_csv(is);
    REQUIRE(back.size() == 2);
    CHECK(back[0].f_value == a.f_value);
    CHECK(back[0].rel_change == a.rel_change);
    CHECK(*back[0].dist_to_truth == *a.dist_to_truth);
    CHECK_FALSE(back[0].contraction.has_value());
    CHECK(back[1].f_value == b.f_value);
    CHECK(*back[1].contraction == *b.contraction);
    CHECK(back[1].elapsed_s == b.elapsed_s);

    std::istringstream bad("wrong,header\n");
    CHECK_THROWS_AS(read_trace_csv(bad), std::runtime_error);
}

TEST_CASE("run_experiment: sensing report, replay, and byte-level determinism") {
    ExperimentConfig cfg;
    cfg.task = Task::Sensing;
    cfg.m = 24;
    cfg.n = 24;
    cfg.rank = 2;
    cfg.sample_factor = 8.0;
    cfg.seed = 3;
    cfg.max_iters = 2000;
    cfg.tol = 1e-8;

    const fs::path dir1 = temp_dir() / "run1";
    const fs::path dir2 = temp_dir() / "run2";
    fs::remove_all(dir1);
    fs::remove_all(dir2);
    const RunReport r1 = run_experiment(cfg, dir1.string());
    const RunReport r2 = run_experiment(cfg, dir2.string());

    CHECK(r1.rel_error.has_value());
    CHECK(*r1.rel_error <= 1e-4);
    CHECK(r1.termination != Termination::Diverged);

    // Byte-identical traces modulo the wall-clock column (physical time is
    // not reproducible); every numeric column must match exactly.
    auto strip_elapsed = [](const std::string& content) {
        std::string out;
        std::istringstream is(content);
        std::string line;
        while (std::getline(is, line)) {
            const std::size_t last_comma = line.rfind(',');
            out += line.substr(0, last_comma);
            out += '\n';
        }
        return out;
    };
    const std::string t1 = slurp(r1.trace_path);
    const std::string t2 = slurp(r2.trace_path);
    CHECK(strip_elapsed(t1) == strip_elapsed(t2));

    // Replay: final metrics recomputed from the trace match the report.
    std::ifstream trace_in(r1.trace_path);
    const SolveTrace trace = read_trace_csv(trace_in);
    REQUIRE(!trace.empty());
    CHECK(trace.back().iter == r1.iterations);
    CHECK(trace.back().f_value == r1.final_f);
    CHECK(trace.back().rel_change == r1.final_rel_change);
    REQUIRE(trace.back().dist_to_truth.has_value());
    CHECK(*trace.back().dist_to_truth == *r1.final_dist);
    if (r1.termination == Termination::Tolerance)
        CHECK(trace.back().rel_change <= cfg.tol);

    // The report JSON parses back with the identical doubles.
    const std::string json = slurp(r1.report_path);
    const std::string key = "\"final_f\": ";
    const std::size_t pos = json.find(key);
    REQUIRE(pos != std::string::npos);
    CHECK(std::strtod(json.c_str() + pos + key.size(), nullptr) == r1.final_f);
}

TEST_CASE("run_experiment covers the one-bit synthetic task") {
    ExperimentConfig cfg;
    cfg.task = Task::OneBitSynth;
    cfg.m = 40;
    cfg.n = 40;
    cfg.rank = 1;
    cfg.observe_fraction = 0.25;
    cfg.link = LinkKind::Probit;
    cfg.noise_sigma = 0.244;
    cfg.alpha = 1.0;
    cfg.solver = SolverKind::BfgdSmooth;
    cfg.seed = 9;
    cfg.max_iters = 1500;
    cfg.tol = 2e-3;  // noisy one-bit fits stop once movement is below 0.2%
    const RunReport report = run_experiment(cfg, (temp_dir() / "onebit").string());
    CHECK(report.sign_acc.has_value());
    CHECK(report.rel_error.has_value());
    CHECK(*report.sign_acc > 0.7);
}

TEST_CASE("run_experiment covers image, ratings, and bench tasks end to end") {
    const fs::path dir = temp_dir();
    const fs::path out = dir / "tasks";

    // Image task: a realizable small picture through SVP.
    Rng rng(33);
    DenseMatrix p(24, 2), q(24, 2);
    for (double& v : p.data()) v = static_cast<double>(rng.below(4));
    for (double& v : q.data()) v = static_cast<double>(rng.below(4));
    DenseMatrix pixels = matmul_a_bt(p, q);
    for (double& v : pixels.data()) v /= 255.0;
    write_pgm((dir / "task.pgm").string(), pixels);

    ExperimentConfig img;
    img.task = Task::Image;
    img.image_path = (dir / "task.pgm").string();
    img.m = 24;
    img.n = 24;
    img.rank = 2;
    img.observe_fraction = 0.6;
    img.solver = SolverKind::Svp;
    img.max_iters = 400;
    img.tol = 1e-9;
    const RunReport img_report = run_experiment(img, out.string());
    REQUIRE(img_report.psnr_db.has_value());
    CHECK(*img_report.psnr_db >= 40.0);

    // Ratings task against the toy file.
    write_file(dir / "task.data", "1\t1\t5\t0\n1\t2\t1\t0\n2\t1\t4\t0\n2\t3\t2\t0\n3\t2\t5\t0\n");
    ExperimentConfig ml;
    ml.task = Task::OneBitMovieLens;
    ml.ratings_path = (dir / "task.data").string();
    ml.holdout = 1;
    ml.rank = 1;
    ml.solver = SolverKind::BfgdSmooth;
    ml.max_iters = 50;
    const RunReport ml_report = run_experiment(ml, out.string());
    CHECK(ml_report.sign_acc.has_value());
    CHECK_FALSE(ml_report.rel_error.has_value());

    // Bench task emits its timing table.
    ExperimentConfig bench;
    bench.task = Task::BenchSvd;
    bench.m = 48;
    bench.rank = 3;
    bench.trials = 1;
    const RunReport bench_report = run_experiment(bench, out.string());
    const std::string csv = slurp(bench_report.trace_path);
    CHECK(csv.find("m,r,t_svd,t_mm") == 0);
    CHECK(csv.find("48,3,") != std::string::npos);
}

TEST_CASE("bench rows are positive and csv has the expected header") {
    const BenchRow row = bench_svd_vs_matmul(96, 6, 3, 5);
    CHECK(row.t_svd > 0.0);
    CHECK(row.t_mm > 0.0);
    std::ostringstream os;
    write_bench_csv(os, std::span<const BenchRow>{&row, 1});
    CHECK(os.str().find("m,r,t_svd,t_mm") == 0);
    CHECK_THROWS_AS(bench_svd_vs_matmul(0, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("bench timings grow with the dimension") {
    const BenchRow small = bench_svd_vs_matmul(64, 4, 3, 6);
    const BenchRow large = bench_svd_vs_matmul(192, 4, 3, 6);  // 27x the flops
    CHECK(large.t_svd > small.t_svd);
    CHECK(large.t_mm > small.t_mm);
}

TEST_CASE("config json: parsing, defaults, and errors") {
    const fs::path dir = temp_dir();
    write_file(dir / "cfg.json",
               R"({"task": "completion", "m": 32, "n": 20, "rank": 4,
                   "observe_fraction": 0.5, "solver": "svp", "seed": 11,
                   "step": 0.2, "init": "random"})");
    const ExperimentConfig cfg = ExperimentConfig::from_json_file((dir / "cfg.json").string());
    CHECK(cfg.task == Task::Completion);
    CHECK(cfg.m == 32);
    CHECK(cfg.n == 20);
    CHECK(cfg.rank == 4);
    CHECK(cfg.solver == SolverKind::Svp);
    CHECK(cfg.step_override.has_value());
    CHECK(*cfg.step_override == 0.2);
    CHECK(cfg.init == "random");
    CHECK(cfg.max_iters == 4000);  // defaults preserved
    CHECK(cfg.tol == 5e-6);
    CHECK(cfg.svp_step == doctest::Approx(1.0 / 3.0));

    write_file(dir / "bad.json", R"({"m": 3})");
    CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "bad.json").string()),
                    std::runtime_error);
    write_file(dir / "bad2.json", R"({"task": "warp-drive"})");
    CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "bad2.json").string()),
                    std::runtime_error);
}

TEST_SUITE_END();
