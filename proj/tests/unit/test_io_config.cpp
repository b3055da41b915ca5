#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "gtml/config.hpp"
#include "gtml/errors.hpp"
#include "gtml/io.hpp"
#include "small_config.hpp"

using namespace gtml;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("gtml_unit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(TrajectoryIo, RoundTrip) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    auto traj = simulate(fixture::random_model(8, 1), Mechanism{{0.0, 2.0}}, env, 300, {}, 5);
    std::stringstream ss;
    io::write_trajectory(ss, traj, env);
    std::string first;
    std::getline(ss, first);
    EXPECT_EQ(first, io::kTrajectoryHeader);
    ss.seekg(0);
    const auto back = io::read_trajectory(ss, env);
    ASSERT_EQ(back.size(), traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) {
        EXPECT_EQ(back.records[t].behavior, traj.records[t].behavior);
        EXPECT_EQ(back.records[t].signal, traj.records[t].signal);
        EXPECT_EQ(back.records[t].user, traj.records[t].user);
    }
}

TEST(TrajectoryIo, MalformedInputNamesTheLine) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const std::string header = std::string(io::kTrajectoryHeader) + "\n";
    auto expect_line = [&](const std::string& body, const std::string& needle) {
        std::stringstream ss(header + body);
        try {
            io::read_trajectory(ss, env);
            FAIL() << "accepted: " << body;
        } catch (const InputError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_line("1,2_2_2,s2c1,q1,1,0\n2,9_9_9,s0c0,q1,0,0\n", "line 3");
    expect_line("1,2_2_2,s2c1,q1,1\n", "line 2");
    expect_line("1,2_2_2,s2c1,q1,1,2\n", "line 2");
    expect_line("2,2_2_2,s2c1,q1,1,0\n", "line 2");
    std::stringstream bad_header("t,b\n");
    EXPECT_THROW(io::read_trajectory(bad_header, env), InputError);
}

TEST(ModelIo, RoundTripIsExact) {
    gsp::Auction auction(fixture::two_query_spec());
    const auto& env = auction.environment();
    const auto model = fixture::random_model(8, 2);
    std::stringstream ss;
    io::write_model(ss, model, env.behaviors, env.signals);
    const auto back = io::read_model(ss, env.behaviors, env.signals);
    for (SignalId h = 0; h < 9; ++h) EXPECT_EQ(back.matrix(h), model.matrix(h));
    std::stringstream wrong;
    io::write_model(wrong, model, env.behaviors, env.signals);
    BehaviorSpace other({"a", "b", "c", "d", "e", "f", "g", "h"});
    EXPECT_THROW(io::read_model(wrong, other, env.signals), InputError);
}

TEST(Csv, CommentLineThenHeaderAndCellCountCheck) {
    const auto dir = scratch_dir("csv");
    {
        io::CsvWriter w(dir / "sub" / "x.csv", {"a", "b"});
        w << "row" << 0.25;
        w.end_row();
        w << std::size_t{3};
        EXPECT_THROW(w.end_row(), InputError);
    }
    std::ifstream in(dir / "sub" / "x.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("# created ", 0), 0u);
    const auto table = io::read_csv(dir / "sub" / "x.csv");
    EXPECT_EQ(table.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_EQ(table.rows[0][1], "0.25");
    EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(Config, DefaultParses) {
    const auto c = parse_config(fixture::default_config_json().dump());
    EXPECT_EQ(c.schema_version, 1);
    EXPECT_EQ(c.auction.bid_levels.size(), 2u);
    EXPECT_EQ(c.data_mechanism.params, (std::vector<double>{0.0, 2.0}));
    EXPECT_FALSE(c.bounds.alpha.has_value());
    EXPECT_EQ(c.end_to_end.sweep.size(), 3u);
}

TEST(Config, RejectsUnknownKeysWithPath) {
    auto j = fixture::default_config_json();
    j["bounds"]["gama"] = 2.0;
    try {
        parse_config(j.dump());
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bounds.gama"), std::string::npos) << e.what();
    }
}

TEST(Config, SchemaVersionAndValueChecks) {
    auto j = fixture::default_config_json();
    j.erase("schema_version");
    EXPECT_THROW(parse_config(j.dump()), ConfigError);
    j = fixture::default_config_json();
    j["schema_version"] = 2;
    EXPECT_THROW(parse_config(j.dump()), ConfigError);
    j = fixture::default_config_json();
    j["bounds"]["s"] = 3.0;
    EXPECT_THROW(parse_config(j.dump()), ConfigError);
    j = fixture::default_config_json();
    j["mechanism_learning"]["rule"] = "nearest";
    EXPECT_THROW(parse_config(j.dump()), ConfigError);
    j = fixture::default_config_json();
    j["auction"]["bid_levels"] = "high";
    EXPECT_THROW(parse_config(j.dump()), ConfigError);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}
