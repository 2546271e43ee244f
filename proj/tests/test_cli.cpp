// Benchmark harness plumbing: config parsing with line-numbered errors,
// command dispatch and exit codes, golden CSV headers and row counts,
// bitwise determinism of non-timing columns, and the SVG writer.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mcrepar/config.hpp"
#include "mcrepar/errors.hpp"
#include "mcrepar/svg.hpp"
#include "mcrepar/sweep.hpp"

using namespace mcrepar;

namespace {

namespace fs = std::filesystem;

// scratch directory per test process
fs::path scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "mcrepar_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
    const fs::path path = scratch_dir() / name;
    std::ofstream out(path);
    out << text;
    return path.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CsvFile {
    std::vector<std::string> meta;    // leading '#' lines
    std::string header;               // first non-meta line
    std::vector<std::string> rows;    // remaining lines
};

CsvFile parse_csv(const std::string& path) {
    CsvFile out;
    std::istringstream in(slurp(path));
    std::string line;
    bool in_meta = true;
    while (std::getline(in, line)) {
        if (in_meta && !line.empty() && line[0] == '#') {
            out.meta.push_back(line);
        } else if (in_meta) {
            out.header = line;
            in_meta = false;
        } else if (!line.empty()) {
            out.rows.push_back(line);
        }
    }
    return out;
}

// strips the last comma-separated field (the wall-time column) of each row
std::string drop_last_field(const std::string& csv_rows) {
    std::istringstream in(csv_rows);
    std::string line, out;
    while (std::getline(in, line)) {
        const std::size_t pos = line.rfind(',');
        out += line.substr(0, pos) + "\n";
    }
    return out;
}

int run(const std::string& command, const std::string& config_path,
        const CommandOptions& opt, std::string* err_text = nullptr,
        std::vector<std::string>* written = nullptr) {
    std::ostringstream err;
    const int rc = run_command(command, config_path, opt, err, written);
    if (err_text) *err_text = err.str();
    return rc;
}

}  // namespace

// --- config parsing -------------------------------------------------------

TEST_CASE("config: values, comments, and types") {
    Config cfg = Config::from_string(
        "# leading comment\n"
        "alpha = 3\n"
        "beta = 2.5   # trailing comment\n"
        "\n"
        "name = two words\n"
        "flag = yes\n"
        "xs = 1, 2, 3\n"
        "seeds = 7, 8\n",
        "inline.conf");
    CHECK(cfg.get_int("alpha") == 3);
    CHECK(cfg.get_real("beta") == doctest::Approx(2.5));
    CHECK(cfg.get_string("name") == "two words");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_real_list("xs", {}) == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(cfg.get_seed_list("seeds") ==
          std::vector<std::uint64_t>{7, 8});
    CHECK_NOTHROW(cfg.require_consumed());
}

TEST_CASE("config: malformed lines carry line numbers") {
    CHECK_THROWS_WITH_AS(Config::from_string("a = 1\nnot a pair\n", "x.conf"),
                         doctest::Contains("x.conf:2"), ConfigError);
    CHECK_THROWS_WITH_AS(Config::from_string("a =\n", "x.conf"),
                         doctest::Contains("x.conf:1"), ConfigError);
    CHECK_THROWS_WITH_AS(Config::from_string("a = 1\na = 2\n", "x.conf"),
                         doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS(Config::from_string("bad key = 1\n", "x.conf"),
                         doctest::Contains("x.conf:1"), ConfigError);
}

TEST_CASE("config: type errors and list hygiene") {
    Config cfg = Config::from_string("n = abc\nxs = 1,,2\nneg = -4\n", "t.conf");
    CHECK_THROWS_AS(cfg.get_int("n"), ConfigError);
    CHECK_THROWS_AS(cfg.get_real_list("xs", {}), ConfigError);
    CHECK_THROWS_AS(cfg.get_seed_list("neg"), ConfigError);
    CHECK_THROWS_AS(cfg.get_int("missing"), ConfigError);
}

TEST_CASE("config: unknown keys are rejected with their lines") {
    Config cfg = Config::from_string("known = 1\nmystery = 2\nrogue = 3\n",
                                     "u.conf");
    CHECK(cfg.get_int("known") == 1);
    try {
        cfg.require_consumed();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("mystery") != std::string::npos);
        CHECK(msg.find("line 2") != std::string::npos);
        CHECK(msg.find("rogue") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }
}

// --- dispatch and exit codes ------------------------------------------------

TEST_CASE("run_command: exit codes") {
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "codes").string();
    std::string err;

    SUBCASE("unknown command") {
        const std::string cfg = write_config("any.conf", "m = 10\n");
        CHECK(run("bogus", cfg, opt, &err) == 2);
        CHECK(err.find("unknown command") != std::string::npos);
    }
    SUBCASE("missing config file") {
        CHECK(run("graph-size", (scratch_dir() / "absent.conf").string(), opt,
                  &err) == 2);
    }
    SUBCASE("unknown key") {
        const std::string cfg =
            write_config("unknown_key.conf", "m = 10\nwat = 1\n");
        CHECK(run("graph-size", cfg, opt, &err) == 2);
        CHECK(err.find("wat") != std::string::npos);
        CHECK(err.find("line 2") != std::string::npos);
    }
    SUBCASE("command mismatch") {
        const std::string cfg =
            write_config("mismatch.conf", "command = timing\n");
        CHECK(run("graph-size", cfg, opt, &err) == 2);
        CHECK(err.find("declares command") != std::string::npos);
    }
    SUBCASE("domain guard") {
        const std::string cfg =
            write_config("low_repeats.conf", "command = timing\nrepeats = 3\n");
        CHECK(run("timing", cfg, opt, &err) == 2);
        CHECK(err.find("repeats") != std::string::npos);
    }
    SUBCASE("numeric divergence") {
        const std::string cfg = write_config(
            "diverge.conf",
            "command = train-demo\nhidden = 4\nn_train = 32\nn_val = 16\n"
            "epochs = 2\nbatch_size = 16\nlr = 1e14\nm_kl = 1\n"
            "train_seeds = 1\ninit_seeds = 500\nn_predictive = 4\n");
        CHECK(run("train-demo", cfg, opt, &err) == 3);
        CHECK(err.find("divergence") != std::string::npos);
    }
}

// --- graph-size golden output ----------------------------------------------

TEST_CASE("graph-size: golden header, row count, and pinned counts") {
    const std::string cfg = write_config(
        "gs.conf",
        "command = graph-size\nfamilies = exponential, normal\n"
        "g = w, w2\nm = 1, 10, 100\n");
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "gs").string();
    std::vector<std::string> written;
    REQUIRE(run("graph-size", cfg, opt, nullptr, &written) == 0);
    REQUIRE(written.size() == 1);

    const CsvFile csv = parse_csv(written[0]);
    CHECK(csv.header ==
          "method,family,g,m,total_nodes,grad_nodes,param_nodes,"
          "interaction_nodes");
    // 2 families x 2 g x 3 m x 2 methods
    CHECK(csv.rows.size() == 24);
    REQUIRE(csv.meta.size() >= 3);
    CHECK(csv.meta[0] == "# command = graph-size");
    CHECK(csv.meta[1] == "# version = 1");
    CHECK(csv.meta[2] == "# seed = 1");

    // direct interactions grow as M * d_p; the factored route stays fixed
    auto has_row = [&](const std::string& needle) {
        for (const std::string& r : csv.rows)
            if (r.find(needle) == 0) return true;
        return false;
    };
    CHECK(has_row("direct,exponential,w^1,100,300,200,1,100"));
    CHECK(has_row("repar,exponential,w^1,100,3,2,1,1"));
    CHECK(has_row("repar,normal,w^2,1,"));
    for (const std::string& r : csv.rows) {
        if (r.find("repar,normal,w^2,") == 0)
            CHECK(r.substr(r.rfind(',') + 1) == "3");
        if (r.find("direct,normal,w^2,100,") == 0)
            CHECK(r.substr(r.rfind(',') + 1) == "300");
    }
}

TEST_CASE("graph-size: factored ln route is scaling-only") {
    const std::string cfg = write_config(
        "gs_log.conf",
        "command = graph-size\nfamilies = normal\ng = logw\nm = 1\n");
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "gs_log").string();
    std::string err;
    CHECK(run("graph-size", cfg, opt, &err) == 2);
    CHECK(err.find("scaling") != std::string::npos);
}

// --- kl-error golden output and determinism ---------------------------------

TEST_CASE("kl-error: headers, row counts, seed override, determinism") {
    const std::string cfg = write_config(
        "kle.conf",
        "command = kl-error\nm = 50, 200\nreplications = 4\n"
        "sigma_grid = 0.5, 1.0\nd_grid = 5, 25\nd_m = 20\n"
        "d_replications = 3\n");
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "kle_a").string();
    std::vector<std::string> a;
    REQUIRE(run("kl-error", cfg, opt, nullptr, &a) == 0);
    REQUIRE(a.size() == 3);

    const CsvFile base = parse_csv(a[0]);
    CHECK(base.header ==
          "m,replication,error,rmse,grad_nodes,interaction_nodes,wall_time_ns");
    CHECK(base.rows.size() == 2 * 4);
    const CsvFile sig = parse_csv(a[1]);
    CHECK(sig.header == "sigma,m,replication,error,rmse,wall_time_ns");
    CHECK(sig.rows.size() == 2 * 2 * 4);
    const CsvFile dsw = parse_csv(a[2]);
    CHECK(dsw.header == "d,m,replication,error,rmse,wall_time_ns");
    CHECK(dsw.rows.size() == 2 * 3);

    // same config, fresh run directory: identical bytes up to timing fields
    opt.out_dir = (scratch_dir() / "kle_b").string();
    std::vector<std::string> b;
    REQUIRE(run("kl-error", cfg, opt, nullptr, &b) == 0);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(drop_last_field(slurp(a[i])) == drop_last_field(slurp(b[i])));

    // CLI seed override beats the config seed and changes the draws
    opt.out_dir = (scratch_dir() / "kle_c").string();
    opt.seed = 7;
    std::vector<std::string> c;
    REQUIRE(run("kl-error", cfg, opt, nullptr, &c) == 0);
    const CsvFile over = parse_csv(c[0]);
    REQUIRE(over.meta.size() >= 3);
    CHECK(over.meta[2] == "# seed = 7");
    CHECK(drop_last_field(slurp(a[0])) != drop_last_field(slurp(c[0])));
}

// --- timing golden output ----------------------------------------------------

TEST_CASE("timing: schema and positive medians") {
    const std::string cfg = write_config(
        "tim.conf",
        "command = timing\nm_repar = 10, 50\nm_direct = 5\nm_accum = 5\n"
        "repeats = 20\nd_repar = 20\nd_direct = 4\n");
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "tim").string();
    std::vector<std::string> written;
    REQUIRE(run("timing", cfg, opt, nullptr, &written) == 0);
    const CsvFile csv = parse_csv(written[0]);
    CHECK(csv.header == "method,m,median_wall_time_ns,repeats");
    REQUIRE(csv.rows.size() == 4);
    CHECK(csv.rows[0].find("repar,10,") == 0);
    CHECK(csv.rows[2].find("direct,5,") == 0);
    CHECK(csv.rows[3].find("accumulation,5,") == 0);
    for (const std::string& r : csv.rows) {
        std::istringstream ss(r);
        std::string method, m, ns, reps;
        std::getline(ss, method, ',');
        std::getline(ss, m, ',');
        std::getline(ss, ns, ',');
        std::getline(ss, reps, ',');
        CHECK(std::stoll(ns) > 0);
        CHECK(reps == "20");
    }
}

// --- train-demo golden output ------------------------------------------------

TEST_CASE("train-demo: schema, summary, and plots toggle") {
    const std::string cfg = write_config(
        "td.conf",
        "command = train-demo\nhidden = 6\nn_train = 64\nn_val = 32\n"
        "epochs = 3\nbatch_size = 16\nm_kl = 1, 4\n"
        "train_seeds = 9000, 9001\ninit_seeds = 500, 500\n"
        "n_predictive = 8\n");
    CommandOptions opt;
    opt.plots = true;
    opt.out_dir = (scratch_dir() / "td").string();
    std::vector<std::string> written;
    REQUIRE(run("train-demo", cfg, opt, nullptr, &written) == 0);
    REQUIRE(written.size() == 3);  // rows, summary, svg

    const CsvFile rows = parse_csv(written[0]);
    CHECK(rows.header ==
          "m_kl,train_seed,init_seed,overall_accuracy,acc_0_5,acc_0_6,acc_0_7,"
          "acc_0_8,acc_0_9,acc_1_0,size_0_5,size_0_6,size_0_7,size_0_8,"
          "size_0_9,size_1_0,wall_time_sec");
    CHECK(rows.rows.size() == 4);  // 2 arms x 2 seed pairs

    const CsvFile sum = parse_csv(written[1]);
    CHECK(sum.header ==
          "threshold,acc_low_median,acc_high_median,delta_accuracy_median,"
          "size_std_low,size_std_high");
    CHECK(sum.rows.size() == 6);
    bool saw_low = false, saw_high = false;
    for (const std::string& m : sum.meta) {
        if (m == "# m_low = 1") saw_low = true;
        if (m == "# m_high = 4") saw_high = true;
    }
    CHECK(saw_low);
    CHECK(saw_high);

    CHECK(written[2].find(".svg") != std::string::npos);
    const std::string svg = slurp(written[2]);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("m_kl = 1") != std::string::npos);

    // plots off: no svg, csv bytes unchanged up to the timing column
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "td_np").string();
    std::vector<std::string> bare;
    REQUIRE(run("train-demo", cfg, opt, nullptr, &bare) == 0);
    CHECK(bare.size() == 2);
    CHECK(drop_last_field(slurp(written[0])) == drop_last_field(slurp(bare[0])));
}

TEST_CASE("train-demo: seed list length mismatch is a config error") {
    const std::string cfg = write_config(
        "td_bad.conf",
        "command = train-demo\ntrain_seeds = 1, 2\ninit_seeds = 500\n");
    CommandOptions opt;
    opt.plots = false;
    opt.out_dir = (scratch_dir() / "td_bad").string();
    std::string err;
    CHECK(run("train-demo", cfg, opt, &err) == 2);
    CHECK(err.find("equal length") != std::string::npos);
}

// --- svg writer ---------------------------------------------------------------

TEST_CASE("svg: renders polylines, escapes labels, rejects empty input") {
    SvgPlot plot;
    plot.title = "a < b & c";
    plot.x_label = "x";
    plot.y_label = "y";
    SvgSeries s;
    s.label = "first<series>";
    s.x = {1.0, 2.0, 3.0};
    s.y = {1.0, 4.0, 9.0};
    plot.series.push_back(s);
    const std::string svg = render_svg(plot);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(svg.find("first&lt;series&gt;") != std::string::npos);

    SvgPlot empty;
    empty.title = "nothing";
    CHECK_THROWS_AS(render_svg(empty), DomainError);

    // log axes skip non-positive points rather than failing
    SvgPlot logp;
    logp.log_x = true;
    logp.log_y = true;
    SvgSeries mixed;
    mixed.label = "mixed";
    mixed.x = {0.0, 10.0, 100.0};
    mixed.y = {-1.0, 5.0, 25.0};
    logp.series.push_back(mixed);
    CHECK_NOTHROW(render_svg(logp));
}
