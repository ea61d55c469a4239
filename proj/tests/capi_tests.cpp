#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "thzris/thzris.h"

namespace {

struct Handle
{
    thzris_config *p = nullptr;
    Handle() { REQUIRE(thzris_config_create("desk", &p) == THZRIS_OK); }
    ~Handle() { thzris_config_destroy(p); }
};

std::string dump(const thzris_config *c)
{
    size_t need = 0;
    REQUIRE(thzris_config_dump(c, nullptr, 0, &need) == THZRIS_OK);
    std::string s(need, '\0');
    REQUIRE(thzris_config_dump(c, s.data(), s.size(), nullptr) == THZRIS_OK);
    s.resize(need - 1);
    return s;
}

std::string slurp(const std::string &path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config lifecycle")
{
    CHECK(std::string(thzris_version()) == "1.0.0");
    Handle h;
    const std::string text = dump(h.p);
    CHECK(text.find("num_aps = 2") != std::string::npos);

    CHECK(thzris_config_set(h.p, "kappa", "0.25") == THZRIS_OK);
    CHECK(std::string(thzris_last_error()).empty());
    CHECK(dump(h.p).find("kappa = 0.25") != std::string::npos);

    CHECK(thzris_config_set(h.p, "no_such_key", "1") == THZRIS_E_INVALID_ARGUMENT);
    CHECK(std::string(thzris_last_error()).find("no_such_key") != std::string::npos);
    // rejected values leave the config untouched
    const std::string before = dump(h.p);
    CHECK(thzris_config_set(h.p, "kappa", "3") == THZRIS_E_INVALID_ARGUMENT);
    CHECK(dump(h.p) == before);

    thzris_config *copy = nullptr;
    REQUIRE(thzris_config_clone(h.p, &copy) == THZRIS_OK);
    CHECK(dump(copy) == before);
    thzris_config_destroy(copy);

    char small[8];
    size_t need = 0;
    CHECK(thzris_config_dump(h.p, small, sizeof small, &need) == THZRIS_E_INVALID_ARGUMENT);
    CHECK(need == before.size() + 1);

    thzris_config *paper = nullptr;
    REQUIRE(thzris_config_create("paper", &paper) == THZRIS_OK);
    CHECK(dump(paper).find("num_aps = 3") != std::string::npos);
    thzris_config_destroy(paper);
    thzris_config *bad = nullptr;
    CHECK(thzris_config_create("nope", &bad) == THZRIS_E_INVALID_ARGUMENT);
    CHECK(bad == nullptr);
    thzris_config_destroy(nullptr);
}

TEST_CASE("null pointers and io errors")
{
    CHECK(thzris_config_create(nullptr, nullptr) == THZRIS_E_INVALID_ARGUMENT);
    CHECK(thzris_config_set(nullptr, "kappa", "0") == THZRIS_E_INVALID_ARGUMENT);
    CHECK(thzris_run(nullptr, "ARIS", 1, nullptr, nullptr, nullptr) == THZRIS_E_INVALID_ARGUMENT);
    Handle h;
    CHECK(thzris_config_load_file(h.p, "/nonexistent/x.conf") == THZRIS_E_IO);
    CHECK(thzris_run(h.p, "SIMPLEX", 1, nullptr, nullptr, nullptr) == THZRIS_E_INVALID_ARGUMENT);
    CHECK(thzris_validate(h.p, 1, "/nonexistent/dir/v.csv", nullptr, nullptr, nullptr) == THZRIS_E_IO);
    CHECK(thzris_sweep(h.p, "speed", nullptr, 0, "ARIS", 1, 1, 1, nullptr, nullptr, nullptr) ==
          THZRIS_E_INVALID_ARGUMENT);
}

TEST_CASE("load file")
{
    const std::string path = "capi_test.conf";
    {
        std::ofstream f(path);
        f << "kappa = 0.75\nsubcarriers = 3\n";
    }
    Handle h;
    REQUIRE(thzris_config_load_file(h.p, path.c_str()) == THZRIS_OK);
    CHECK(dump(h.p).find("subcarriers = 3") != std::string::npos);
    {
        std::ofstream f(path);
        f << "kappa = 0.75\nbogus\n";
    }
    CHECK(thzris_config_load_file(h.p, path.c_str()) == THZRIS_E_INVALID_ARGUMENT);
    CHECK(std::string(thzris_last_error()).find("line 2") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("run, sweep, validate")
{
    Handle h;
    thzris_result r{};
    REQUIRE(thzris_run(h.p, "RND_ARIS", 5, "capi_row.csv", "capi_trace.csv", &r) == THZRIS_OK);
    CHECK(std::string(r.method) == "RND_ARIS");
    CHECK(r.seed == 5);
    CHECK(r.se > 0.0);
    CHECK(r.feasible == 1);
    CHECK(r.error == nullptr);
    const std::string row = slurp("capi_row.csv");
    CHECK(row.rfind("axis,value,method,seed,", 0) == 0);
    CHECK(std::count(row.begin(), row.end(), '\n') == 2);
    CHECK(slurp("capi_trace.csv").rfind("iter,", 0) == 0);
    std::remove("capi_row.csv");
    std::remove("capi_trace.csv");

    struct Seen
    {
        std::vector<thzris_result> rows;
    } seen;
    const double values[] = {0.0, 1.0};
    REQUIRE(thzris_sweep(
                h.p, "kappa", values, 2, "RND_ARIS", 1, 9, 1, nullptr,
                [](const thzris_result *row, void *user) { static_cast<Seen *>(user)->rows.push_back(*row); },
                &seen) == THZRIS_OK);
    REQUIRE(seen.rows.size() == 2);
    CHECK(seen.rows[0].axis_value == 0.0);
    CHECK(seen.rows[1].axis_value == 1.0);
    CHECK(seen.rows[0].seed == seen.rows[1].seed);

    int all = 0, count = 0;
    REQUIRE(thzris_validate(
                h.p, 3, nullptr, [](const char *, int, double, const char *, void *user) { ++*static_cast<int *>(user); },
                &count, &all) == THZRIS_OK);
    CHECK(all == 1);
    CHECK(count >= 15);
}
