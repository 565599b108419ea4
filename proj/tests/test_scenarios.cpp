#include <catch_amalgamated.hpp>

#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bracket_steer/bracket_steer.hpp"

using namespace bracket_steer;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string shipped(const std::string& name) { return std::string(SCENARIO_DIR) + "/" + name + ".json"; }

Error parse_error_of(const std::string& text) {
    try {
        (void)parse_scenario(text);
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected a scenario error");
    throw std::logic_error("unreachable");
}

nlohmann::json disc_json() { return scenario_to_json(builtin_scenario("rolling-disc")); }

}  // namespace

TEST_CASE("built-in scenarios carry the worked parameters") {
    const auto disc = builtin_scenario("rolling-disc");
    CHECK(disc.kind == ScenarioKind::SingleSystem);
    CHECK(disc.gains.epsilon == 1.0);
    CHECK(disc.gains.gamma == 5.0);
    CHECK(disc.x0 == Vector{{2.0, 1.0, 0.0, std::numbers::pi}});
    CHECK(disc.selection == BracketSelection{{1}, {{1, 2}}, {1}});
    CHECK(disc.system().state_dim() == 4);

    const auto uni = builtin_scenario("unicycle-leader");
    CHECK(uni.kind == ScenarioKind::Formation);
    CHECK(uni.gains.epsilon == 0.1);
    REQUIRE(uni.agents.size() == 1);
    CHECK(uni.agents[0].gamma == 10.0);
    CHECK(uni.agents[0].offset == Vector{{0.1, 0.1, 0.0}});
    CHECK(uni.agents[0].x0 == Vector{{1.0, 0.5, 0.0}});
    CHECK(uni.leader_x0 == Vector{{0.0, 0.0, std::numbers::pi / 4}});

    try {
        (void)builtin_scenario("nonexistent");
        FAIL("expected a lookup error");
    } catch (const Error& e) {
        CHECK(e.error_class() == ErrorClass::Lookup);
    }
}

TEST_CASE("built-in bundles validate cleanly") {
    for (const auto& name : builtin_names()) {
        const auto b = builtin_scenario(name);
        CHECK_NOTHROW(validate_bundle(b));
        for (const auto& cert : certify(b)) {
            CHECK(cert.rank_ok);
            CHECK(cert.sampled_states.size() == 100);
        }
    }
}

TEST_CASE("shipped scenario files reproduce the built-ins byte for byte") {
    for (const auto& name : builtin_names()) {
        const auto b = builtin_scenario(name);
        const std::string text = read_file(shipped(name));
        CHECK(load_scenario(shipped(name)) == b);
        CHECK(serialize_scenario(b) == text);
    }
}

TEST_CASE("serialize then parse round-trips") {
    for (const auto& name : builtin_names()) {
        const auto b = builtin_scenario(name);
        const auto back = parse_scenario(serialize_scenario(b));
        CHECK(back == b);
        CHECK(serialize_scenario(back) == serialize_scenario(b));
    }

    auto custom = builtin_scenario("rolling-disc");
    custom.name = "custom";
    custom.gains.y_star = Vector{{0.25, -1.0 / 3.0}};
    custom.gains.epsilon = 0.1;
    custom.sim = SimConfig{7.5, 80, 3};
    custom.expect = Expectations{0.05, std::nullopt};
    CHECK(parse_scenario(serialize_scenario(custom)) == custom);
}

TEST_CASE("optional fields take their defaults") {
    auto j = disc_json();
    j["selection"].erase("kappa");
    j["sim"].erase("substeps_per_period");
    j["sim"].erase("record_stride");
    j["gains"].erase("cond_cap");
    j.erase("expect");
    const auto b = scenario_from_json(j);
    CHECK(b.selection.kappa == std::vector<int>{1});
    CHECK(b.sim.substeps_per_period == 0);
    CHECK(b.sim.record_stride == 1);
    CHECK(b.gains.cond_cap == kDefaultConditionCap);
}

TEST_CASE("schema violations name the invariant") {
    SECTION("duplicate kappa") {
        auto j = scenario_to_json(builtin_scenario("rolling-disc"));
        j["system"]["model"] = "unicycle";
        j["system"]["n1"] = 3;
        j["x0"] = {0.0, 0.0, 0.0};
        j["probe_box"]["lo"] = {-1.0, -1.0, -1.0};
        j["probe_box"]["hi"] = {1.0, 1.0, 1.0};
        j["gains"]["y_star"] = {0.0, 0.0, 0.0};
        j["selection"] = {{"s1", {1}}, {"s2", {{1, 2}, {2, 1}}}, {"kappa", {1, 1}}};
        const auto e = parse_error_of(j.dump());
        CHECK(e.error_class() == ErrorClass::Schema);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("kappa pairwise distinct"));
        CHECK_THAT(std::string(e.what()), ContainsSubstring("selection"));
    }
    SECTION("gamma = 0") {
        auto j = disc_json();
        j["gains"]["gamma"] = 0.0;
        const auto e = parse_error_of(j.dump());
        CHECK(e.error_class() == ErrorClass::Schema);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("gamma > 0"));
    }
    SECTION("agent gamma = 0") {
        auto j = scenario_to_json(builtin_scenario("unicycle-leader"));
        j["agents"][0]["gamma"] = 0.0;
        const auto e = parse_error_of(j.dump());
        CHECK(e.error_class() == ErrorClass::Schema);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("agents[0].gamma"));
    }
    SECTION("selection size") {
        auto j = disc_json();
        j["selection"]["s1"] = {1, 2};
        const auto e = parse_error_of(j.dump());
        CHECK(e.error_class() == ErrorClass::Schema);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("|S1|+|S2| = n1"));
    }
    SECTION("bracket of a field with itself") {
        auto j = disc_json();
        j["selection"]["s2"] = {{1, 1}};
        CHECK_THAT(std::string(parse_error_of(j.dump()).what()), ContainsSubstring("i1 != i2"));
    }
    SECTION("missing field") {
        auto j = disc_json();
        j["sim"].erase("t_final");
        const auto e = parse_error_of(j.dump());
        CHECK(e.error_class() == ErrorClass::Schema);
        CHECK_THAT(std::string(e.what()), ContainsSubstring("sim.t_final"));
    }
    SECTION("wrong type") {
        auto j = disc_json();
        j["gains"]["epsilon"] = "fast";
        CHECK_THAT(std::string(parse_error_of(j.dump()).what()), ContainsSubstring("gains.epsilon"));
    }
    SECTION("x0 dimension") {
        auto j = disc_json();
        j["x0"] = {1.0, 2.0};
        CHECK_THAT(std::string(parse_error_of(j.dump()).what()), ContainsSubstring("x0"));
    }
    SECTION("unknown model") {
        auto j = disc_json();
        j["system"]["model"] = "hovercraft";
        CHECK(parse_error_of(j.dump()).error_class() == ErrorClass::Lookup);
    }
    SECTION("leader dimension") {
        auto j = scenario_to_json(builtin_scenario("unicycle-leader"));
        j["leader"]["x0"] = {0.0, 0.0};
        CHECK(parse_error_of(j.dump()).error_class() == ErrorClass::Schema);
    }
}

TEST_CASE("parse errors report line and column") {
    const auto e = parse_error_of("{\n  \"kind\": \"single-system\",\n  \"gains\": {,}\n}\n");
    CHECK(e.error_class() == ErrorClass::Parse);
    CHECK_THAT(std::string(e.what()), ContainsSubstring("<string>:3:"));
}

TEST_CASE("missing scenario file is an I/O error") {
    try {
        (void)load_scenario("/nonexistent/dir/scenario.json");
        FAIL("expected an I/O error");
    } catch (const Error& e) {
        CHECK(e.error_class() == ErrorClass::Io);
    }
}

TEST_CASE("field library lookups") {
    CHECK(models::make_system("brockett", 3).lie_bracket(1, 2, Vector{{0.3, -0.2, 1.0}}) == Vector{{0.0, 0.0, 2.0}});
    CHECK_THROWS_AS(models::make_system("rolling-disc", 5), Error);
    CHECK_THROWS_AS(models::make_leader("comet"), Error);
    CHECK(models::make_leader("stationary")(1.0, Vector::Ones(5)) == Vector::Zero(5));
}
