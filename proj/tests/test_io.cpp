#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include <constmoran/io.hpp>
#include <constmoran/moran.hpp>
#include <constmoran/report_io.hpp>

using namespace constmoran;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("constmoran_test_" + std::to_string(std::rand()) + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = (path / name).string();
        std::ofstream out(p);
        out << content;
        return p;
    }
};

} // namespace

TEST_CASE("load_dataset joins values and adjacency by identifier") {
    TempDir tmp;
    const auto values = tmp.file("v.csv",
                                 "site_id,alpha,beta\n"
                                 "C,3.0,30\n"
                                 "A,1.0,10\n"
                                 "B,2.0,20\n");
    const auto adjacency = tmp.file("a.txt", "A B\nB C\n");
    const auto ds = load_dataset(values, adjacency);
    CHECK(ds.n_sites() == 3);
    CHECK(ds.site_ids == std::vector<std::string>{"A", "B", "C"});
    CHECK(ds.variable("alpha").values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(ds.variable("beta").values == std::vector<double>{10.0, 20.0, 30.0});
    CHECK(ds.adjacency.n_edges() == 2);
    CHECK_THROWS_AS(ds.variable("missing"), const error&);
}

TEST_CASE("load_dataset rejects duplicate site ids") {
    TempDir tmp;
    const auto values = tmp.file("v.csv", "site_id,x\nA,1\nA,2\nB,3\n");
    const auto adjacency = tmp.file("a.txt", "A B\n");
    CHECK_THROWS_AS(load_dataset(values, adjacency), const parse_error&);
}

TEST_CASE("load_dataset rejects adjacency ids missing from the values file") {
    TempDir tmp;
    const auto values = tmp.file("v.csv", "site_id,x\nA,1\nB,2\n");
    const auto adjacency = tmp.file("a.txt", "A B\nB Z\n");
    CHECK_THROWS_AS(load_dataset(values, adjacency), const error&);
}

TEST_CASE("load_dataset rejects values rows with no adjacency entry") {
    TempDir tmp;
    const auto values = tmp.file("v.csv", "site_id,x\nA,1\nB,2\nQ,3\n");
    const auto adjacency = tmp.file("a.txt", "A B\n");
    CHECK_THROWS_AS(load_dataset(values, adjacency), const error&);
}

TEST_CASE("load_dataset rejects non-numeric cells with a located message") {
    TempDir tmp;
    const auto values = tmp.file("v.csv", "site_id,x\nA,1\nB,oops\n");
    const auto adjacency = tmp.file("a.txt", "A B\n");
    CHECK_THROWS_AS(load_dataset(values, adjacency), const parse_error&);
}

TEST_CASE("grid dataset ids are row-major indices joined by value") {
    TempDir tmp;
    // shuffled row order; ids are the row-major cells of a 2x2 grid
    const auto values = tmp.file("v.csv", "site_id,onehot\n3,0\n0,1\n2,0\n1,0\n");
    const auto ds = load_dataset_grid(values, 2, 2);
    CHECK(ds.variable("onehot").values == std::vector<double>{1.0, 0.0, 0.0, 0.0});
    const auto w = row_normalize(ds.adjacency);
    CHECK(moran_i(ds.variable("onehot"), w) ==
          doctest::Approx(moran_i(Field({1, 0, 0, 0}), w)));
}

TEST_CASE("grid dataset validates coverage and id syntax") {
    TempDir tmp;
    CHECK_THROWS_AS(load_dataset_grid(tmp.file("a.csv", "site_id,x\n0,1\n1,2\n"), 2, 2),
                    const error&);
    CHECK_THROWS_AS(
        load_dataset_grid(tmp.file("b.csv", "site_id,x\nA,1\n1,2\n2,3\n3,4\n"), 2, 2),
        const error&);
    CHECK_THROWS_AS(
        load_dataset_grid(tmp.file("c.csv", "site_id,x\n0,1\n1,2\n2,3\n9,4\n"), 2, 2),
        const error&);
}

TEST_CASE("rank_transform produces average ranks") {
    const Field f({10.0, 30.0, 20.0, 30.0}, "v");
    const auto r = rank_transform(f);
    CHECK(r.values == std::vector<double>{1.0, 3.5, 2.0, 3.5});
    CHECK(r.name == "v");
}

TEST_CASE("field CSV bytes are deterministic and feed back through grid loading") {
    TempDir tmp;
    const Field f({0.5, -1.25, 3.0, 0.0625}, "value");
    const auto csv = field_to_csv(f);
    CHECK(csv == field_to_csv(f));
    const auto path = tmp.file("f.csv", csv);
    const auto ds = load_dataset_grid(path, 2, 2);
    CHECK(ds.variable("value").values == f.values);
}

TEST_CASE("report JSON carries the schema version and is deterministic") {
    TestReport r;
    r.observed_stat = 0.25;
    r.p_value = 0.0123;
    r.null_sample_count = 10;
    r.null_summary = summarize(std::vector<double>{0.1, 0.2, 0.3});
    r.method = "constant_i";
    r.stat = "pearson";
    r.tail = "two_sided";
    r.pairing = "cross_pairs";
    r.n_samples = 5;
    r.seed = 42;
    const auto j = to_json(r);
    CHECK(j["schema_version"] == 1);
    CHECK(j["kind"] == "test_report");
    CHECK(j.dump() == to_json(r).dump());
}

TEST_CASE("calibration CSV has one row per method/stat/alpha") {
    CalibrationReport r;
    r.cells.push_back({"constant_i", "pearson", 0.05, 0.06, 0.03, 0.09});
    r.cells.push_back({"random_permutation", "pearson", 0.05, 0.31, 0.25, 0.38});
    const auto csv = to_csv(r);
    CHECK(csv.find("method,stat,alpha,rate,lower,upper\n") == 0);
    CHECK(csv.find("constant_i,pearson,0.05") != std::string::npos);
    CHECK(csv.find("random_permutation,pearson,0.05") != std::string::npos);
}
