#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "../tools/cli.hpp"
#include "support.hpp"

using namespace harvex;

namespace {

std::string minimal_scenario_text() {
  return R"({
    "schema_version": "1",
    "domain": {
      "n_regions": 1,
      "edges": [],
      "a_diag": [0.05],
      "b_diag": [1.0],
      "d_weights": [1.0],
      "pi_weights": [1.0]
    },
    "economics": { "r": 0.1, "beta": 0.5, "horizon": 10.0, "kappa0": 1.0 },
    "priors": { "models": [ { "mean": [1.0], "scatter": [[1.0]], "weight": 1.0 } ] },
    "preferences": { "gamma": 1.0, "seed": 42 }
  })";
}

std::string read_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return buffer.str();
}

std::string temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("harvex_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("scenario parsing") {
  SECTION("minimal valid scenario") {
    Scenario s = parse_scenario_text(minimal_scenario_text(), "<memory>");
    REQUIRE(s.domain.n_regions == 1);
    REQUIRE(s.economics.kappa0 == 1.0);
    REQUIRE(s.seed.has_value());
    REQUIRE(*s.seed == 42);
    REQUIRE(s.time_grid.points == 101);  // defaulted
    REQUIRE(s.variant == RateVariant::AlphaWeighted);
  }
  SECTION("missing beta names the field path") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"beta\": 0.5,"), 13, "");
    try {
      parse_scenario_text(text, "<memory>");
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      REQUIRE(e.field() == "economics.beta");
    }
  }
  SECTION("prior weights off the simplex name the field path") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"weight\": 1.0"), 13, "\"weight\": 0.9");
    try {
      parse_scenario_text(text, "<memory>");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      REQUIRE(e.field() == "priors.weights");
    }
  }
  SECTION("unknown schema version is rejected") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"schema_version\": \"1\""), 21, "\"schema_version\": \"9\"");
    REQUIRE_THROWS_AS(parse_scenario_text(text, "<memory>"), SchemaError);
  }
  SECTION("kappa0 defaults to <D, m_B>") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"kappa0\": 1.0 "), 14, "\"kappa0_unused\": 1.0 ");
    // Rebuild without kappa0 entirely.
    text = minimal_scenario_text();
    const auto pos = text.find(", \"kappa0\": 1.0");
    text.replace(pos, std::string(", \"kappa0\": 1.0").size(), "");
    Scenario s = parse_scenario_text(text, "<memory>");
    REQUIRE_FALSE(s.kappa0_explicit);
    REQUIRE(s.economics.kappa0 == 1.0);  // D = 1, m_B = 1
  }
  SECTION("unknown tolerance keys are rejected") {
    std::string text = minimal_scenario_text();
    text.insert(text.rfind('}'), R"(, "tolerances": {"bogus": 1.0})");
    REQUIRE_THROWS_AS(parse_scenario_text(text, "<memory>"), SchemaError);
  }
  SECTION("initial_state must match the region count") {
    std::string text = minimal_scenario_text();
    text.insert(text.rfind('}'), R"(, "initial_state": [1.0, 2.0])");
    REQUIRE_THROWS_AS(parse_scenario_text(text, "<memory>"), ValidationError);
  }
  SECTION("bad JSON is a schema error") {
    REQUIRE_THROWS_AS(parse_scenario_text("{not json", "<memory>"), SchemaError);
  }
  SECTION("bundled scenarios parse") {
    for (const char* name : {"n1_hand.json", "n1_growth.json", "k2_symmetric.json"}) {
      const Scenario s = parse_scenario(testing::scenario_dir() + "/" + name);
      REQUIRE(s.schema_version == "1");
      REQUIRE(s.seed.has_value());
    }
  }
}

TEST_CASE("run orchestration") {
  const Scenario scenario = parse_scenario(testing::scenario_dir() + "/n1_hand.json");

  SECTION("risk run writes the hand value") {
    const std::string out = temp_dir("risk");
    REQUIRE(run("risk", scenario, out) == 0);
    const std::string body = read_file(out + "/risk.json");
    REQUIRE(body.find("\"total_risk\":-0.090322849314229") != std::string::npos);
    REQUIRE(body.find("allocation_identity_residual") != std::string::npos);
  }
  SECTION("simulate emits a CSV with 1 + 2N columns") {
    const Scenario k2 = parse_scenario(testing::scenario_dir() + "/k2_symmetric.json");
    const std::string out = temp_dir("simulate");
    REQUIRE(run("simulate", k2, out) == 0);
    std::ifstream csv(out + "/simulate.csv");
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "t,k_1,k_2,c_1,c_2");
    std::string first_row;
    std::getline(csv, first_row);
    REQUIRE(std::count(first_row.begin(), first_row.end(), ',') == 4);
  }
  SECTION("identical runs produce byte-identical reports") {
    for (const std::string sub :
         {"spectral", "solve", "simulate", "risk", "allocate", "robust", "barycenter",
          "verify"}) {
      const std::string out_a = temp_dir(sub + "_a");
      const std::string out_b = temp_dir(sub + "_b");
      REQUIRE(run(sub, scenario, out_a) == 0);
      REQUIRE(run(sub, scenario, out_b) == 0);
      for (const auto& entry : std::filesystem::directory_iterator(out_a)) {
        const std::string name = entry.path().filename().string();
        REQUIRE(read_file(out_a + "/" + name) == read_file(out_b + "/" + name));
      }
    }
  }
  SECTION("unknown subcommand is a validation error") {
    REQUIRE_THROWS_AS(run("frobnicate", scenario, temp_dir("bogus")), ValidationError);
  }
  SECTION("verify passes every assertive oracle on the bundled scenarios") {
    for (const char* name : {"n1_hand.json", "n1_growth.json", "k2_symmetric.json"}) {
      const Scenario s = parse_scenario(testing::scenario_dir() + "/" + name);
      const std::string out = temp_dir(std::string("verify_") + name);
      REQUIRE(run("verify", s, out) == 0);
      const auto body = nlohmann::json::parse(read_file(out + "/verify.json"));
      REQUIRE(body.at("all_assertive_passed").get<bool>());
      for (const auto& r : body.at("reports")) {
        if (!r.at("diagnostics").contains("flag")) {
          INFO(name << ": " << r.at("name").get<std::string>());
          REQUIRE(r.at("passed").get<bool>());
        }
      }
    }
  }
  SECTION("tolerance overrides reach the oracle suite") {
    const std::string out = temp_dir("tol_override");
    RunOptions options;
    options.tolerance_overrides["mc_samples"] = 5000.0;
    REQUIRE(run("verify", scenario, out, options) == 0);
    const auto body = nlohmann::json::parse(read_file(out + "/verify.json"));
    bool seen = false;
    for (const auto& r : body.at("reports")) {
      if (r.at("name") == "mc_expected_loss") {
        REQUIRE(r.at("diagnostics").at("samples") == "5000");
        seen = true;
      }
    }
    REQUIRE(seen);
    REQUIRE(body.at("scenario").at("tolerances").at("mc_samples").get<double>() == 5000.0);
  }
  SECTION("variant override changes the echoed scenario") {
    const std::string out = temp_dir("variant");
    RunOptions options;
    options.variant_override = RateVariant::FocDerived;
    REQUIRE(run("solve", scenario, out, options) == 0);
    REQUIRE(read_file(out + "/solve.json").find("\"rate_variant\":\"foc\"") !=
            std::string::npos);
  }
  SECTION("report doubles round-trip at full precision") {
    const std::string out = temp_dir("roundtrip");
    REQUIRE(run("risk", scenario, out) == 0);
    const std::string body = read_file(out + "/risk.json");
    const std::string key = "\"tilde_alpha\":[";
    const auto pos = body.find(key) + key.size();
    const double parsed = std::stod(body.substr(pos, body.find(']', pos) - pos));
    RiskCoefficients coeffs = risk_coefficients(
        build_control_solution(scenario.domain, lowest_eigenpair(drift_matrix(scenario.domain)),
                               scenario.economics),
        scenario.domain);
    REQUIRE(parsed == coeffs.tilde_alpha(0));
  }
}

TEST_CASE("exit codes") {
  SECTION("missing scenario file maps to 2") {
    REQUIRE(run_catching("risk", "/nonexistent/path.json", temp_dir("io")) == 2);
  }
  SECTION("validation failure maps to 2") {
    const std::string path = temp_dir("badscn") + "/bad.json";
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"weight\": 1.0"), 13, "\"weight\": 0.9");
    report::write_file(path, text);
    REQUIRE(run_catching("risk", path, temp_dir("badout")) == 2);
  }
  SECTION("numeric failure maps to 1") {
    // lambda = r/(1-beta) makes theta degenerate.
    const std::string path = temp_dir("numscn") + "/degenerate.json";
    std::string text = minimal_scenario_text();
    text.replace(text.find("[0.05]"), 6, "[0.2]");
    report::write_file(path, text);
    REQUIRE(run_catching("risk", path, temp_dir("numout")) == 1);
  }
  SECTION("sampling without a seed maps to 2") {
    const std::string path = temp_dir("noseed") + "/noseed.json";
    std::string text = minimal_scenario_text();
    text.replace(text.find("\"gamma\": 1.0, \"seed\": 42"), 25, "\"gamma\": 1.0");
    report::write_file(path, text);
    REQUIRE(run_catching("robust", path, temp_dir("noseedout")) == 2);
    REQUIRE(run_catching("risk", path, temp_dir("noseedout2")) == 0);  // risk never samples
  }
}

TEST_CASE("command-line front end") {
  const std::string scenario_path = testing::scenario_dir() + "/n1_hand.json";

  SECTION("unknown subcommand exits 64") {
    const char* argv[] = {"harvex", "frobnicate"};
    REQUIRE(cli::main(2, argv) == 64);
  }
  SECTION("missing required option exits 64") {
    const char* argv[] = {"harvex", "risk"};
    REQUIRE(cli::main(2, argv) == 64);
  }
  SECTION("malformed tolerance exits 64") {
    const std::string out = temp_dir("cli_tol");
    const char* argv[] = {"harvex", "risk", "--scenario", scenario_path.c_str(),
                          "--out",  out.c_str(), "--tolerance", "rk4"};
    REQUIRE(cli::main(8, argv) == 64);
  }
  SECTION("risk subcommand runs end to end") {
    const std::string out = temp_dir("cli_risk");
    const char* argv[] = {"harvex", "risk", "--scenario", scenario_path.c_str(), "--out",
                          out.c_str()};
    REQUIRE(cli::main(6, argv) == 0);
    REQUIRE(std::filesystem::exists(out + "/risk.json"));
  }
  SECTION("no-aversion flag flows through") {
    const std::string out = temp_dir("cli_noav");
    const char* argv[] = {"harvex",     "risk", "--scenario", scenario_path.c_str(),
                          "--out",      out.c_str(), "--no-aversion"};
    REQUIRE(cli::main(7, argv) == 0);
    const std::string body = read_file(out + "/risk.json");
    REQUIRE(body.find("\"no_aversion\":true") != std::string::npos);
    REQUIRE(body.find("\"total_risk\":-0.0948180838242836") != std::string::npos);
  }
}
