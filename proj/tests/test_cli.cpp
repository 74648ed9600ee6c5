#include "cli_app.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using conelab::cli::json;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = conelab::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string config(const std::string& name)
{
    return (fs::path(CONELAB_CONFIG_DIR) / name).string();
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("conelab_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& csv)
{
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
        const std::size_t end = csv.find("\r\n", start);
        if (end == std::string::npos)
            break;
        lines.push_back(csv.substr(start, end - start));
        start = end + 2;
    }
    return lines;
}

// lo and hi are the two columns before metadata; metadata never holds commas here.
std::pair<double, double> lo_hi(const std::string& line)
{
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(cell);
    if (line.back() == ',')
        cells.emplace_back();
    const std::size_t n = cells.size();
    return {std::stod(cells[n - 3]), std::stod(cells[n - 2])};
}

json write_config(const fs::path& dir, const std::string& name, const json& body)
{
    fs::create_directories(dir);
    std::ofstream(dir / name) << body.dump(2);
    return body;
}

} // namespace

TEST(Cli, DensityProfileWritesCsvAndSummary)
{
    const fs::path dir = scratch("density");
    const Outcome r = invoke({"density", "--config", config("profile.json"), "--seed", "7", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto lines = lines_of(slurp(dir / "profile.csv"));
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(lines.front(), conelab::cli::kCsvHeader);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto [lo, hi] = lo_hi(lines[i]);
        EXPECT_LE(lo, hi) << lines[i];
    }
    const json summary = json::parse(slurp(dir / "profile.json"));
    EXPECT_EQ(summary.at("schema_version"), 1);
    EXPECT_EQ(summary.at("rows"), lines.size() - 1);
    EXPECT_TRUE(summary.at("checks").at("rows_lo_le_hi").get<bool>());
}

TEST(Cli, EverySampleConfigRuns)
{
    const std::vector<std::pair<std::string, std::string>> runs{
        {"measure", "ball_measure.json"}, {"density", "deficiency.json"}, {"hom", "hom.json"}, {"doubling", "doubling.json"}};
    for (const auto& [cmd, file] : runs) {
        const Outcome r = invoke({cmd, "--config", config(file)});
        EXPECT_EQ(r.code, 0) << cmd << ": " << r.err;
        const auto lines = lines_of(r.out);
        ASSERT_GE(lines.size(), 2u) << cmd;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto [lo, hi] = lo_hi(lines[i]);
            EXPECT_LE(lo, hi) << cmd << ": " << lines[i];
        }
    }
}

TEST(Cli, ThreadCountDoesNotChangeOutput)
{
    const fs::path one = scratch("threads1");
    const fs::path four = scratch("threads4");
    ASSERT_EQ(invoke({"density", "--config", config("profile.json"), "--threads", "1", "--out", one.string()}).code, 0);
    ASSERT_EQ(invoke({"density", "--config", config("profile.json"), "--threads", "4", "--out", four.string()}).code, 0);
    EXPECT_EQ(slurp(one / "profile.csv"), slurp(four / "profile.csv"));
}

TEST(Cli, BadAlphaIsAConfigError)
{
    const Outcome r = invoke({"density", "--config", config("bad_alpha.json")});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("params.alpha"), std::string::npos) << r.err;
}

TEST(Cli, UnknownKeysNameTheirPath)
{
    const fs::path dir = scratch("unknown");
    json body = json::parse(slurp(config("profile.json")));
    body["params"]["alpah"] = 0.5;
    write_config(dir, "typo.json", body);
    const Outcome r = invoke({"density", "--config", (dir / "typo.json").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("alpah"), std::string::npos) << r.err;

    json top = json::parse(slurp(config("profile.json")));
    top["extra"] = 1;
    write_config(dir, "top.json", top);
    EXPECT_EQ(invoke({"density", "--config", (dir / "top.json").string()}).code, 2);
}

TEST(Cli, MissingFileAndUnknownFlag)
{
    EXPECT_EQ(invoke({"density", "--config", "/nonexistent/x.json"}).code, 2);
    EXPECT_EQ(invoke({"density", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({}).code, 2);
}

TEST(Cli, ConstantsReportsEveryInequality)
{
    const Outcome r = invoke({"constants", "-n", "2", "-m", "1", "-s", "1.5", "--alpha", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = json::parse(r.out);
    EXPECT_TRUE(j.at("all_ok").get<bool>());
    const json& ineq = j.at("inequalities");
    ASSERT_FALSE(ineq.empty());
    for (auto it = ineq.begin(); it != ineq.end(); ++it)
        EXPECT_TRUE(it.value().get<bool>()) << it.key();
}

TEST(Cli, ConstantsDomainErrors)
{
    EXPECT_EQ(invoke({"constants", "-n", "2", "-m", "1", "-s", "1.5", "--alpha", "1.5"}).code, 2);
    EXPECT_EQ(invoke({"constants", "-n", "2", "-m", "1", "-s", "0.5", "--alpha", "0.5"}).code, 2);
    EXPECT_EQ(invoke({"constants", "-n", "2", "-m", "2", "-s", "2", "--alpha", "0.5"}).code, 2);
}

TEST(Cli, EfSearch)
{
    const Outcome line = invoke({"ef", "-n", "1", "--alpha", "0.3", "--trials", "200"});
    ASSERT_EQ(line.code, 0);
    EXPECT_FALSE(json::parse(line.out).at("triple_free_set_found").get<bool>());

    const Outcome plane = invoke({"ef", "-n", "2", "--alpha", "0.1", "--trials", "2000", "--seed", "6"});
    ASSERT_EQ(plane.code, 0);
    const json j = json::parse(plane.out);
    ASSERT_TRUE(j.at("triple_free_set_found").get<bool>());
    EXPECT_TRUE(j.at("verified_with_net").get<bool>());

    EXPECT_EQ(invoke({"ef", "--size", "2"}).code, 2);
}

TEST(Cli, VerifyExampleGuardsAndErrors)
{
    const Outcome deep = invoke({"verify-example", "--which", "1", "--depth", "99"});
    EXPECT_EQ(deep.code, 4);
    EXPECT_NE(deep.err.find("resource guard"), std::string::npos);
    EXPECT_EQ(invoke({"verify-example", "--which", "1", "--depth", "5"}).code, 2);
    EXPECT_EQ(invoke({"verify-example", "--which", "3", "--depth", "30"}).code, 4);
    EXPECT_EQ(invoke({"verify-example", "--which", "4"}).code, 2);
}

TEST(Cli, VerifyExampleTwoPasses)
{
    const Outcome r = invoke({"verify-example", "--which", "2", "--depth", "40"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("verdict: pass"), std::string::npos) << r.err;
    EXPECT_GE(lines_of(r.out).size(), 2u);

    const fs::path dir = scratch("example2");
    ASSERT_EQ(invoke({"verify-example", "--which", "2", "--depth", "40", "--out", dir.string()}).code, 0);
    const json summary = json::parse(slurp(dir / "example2.json"));
    EXPECT_EQ(summary.at("level_radius_sum").get<double>(), 1.0);
    EXPECT_EQ(summary.at("level_diameter_sum").get<double>(), 2.0);
}

TEST(Cli, VerifyExampleThreeWritesSummary)
{
    const fs::path dir = scratch("example3");
    const Outcome r = invoke({"verify-example", "--which", "3", "--depth", "8", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const json summary = json::parse(slurp(dir / "example3.json"));
    EXPECT_EQ(summary.at("experiment"), "example3");
    EXPECT_TRUE(summary.at("checks").at("no_inverted_intervals").get<bool>());
}
