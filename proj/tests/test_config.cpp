#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "uavsim/config.hpp"

using namespace uavsim;
using namespace uavsim::config;
using doctest::Approx;

TEST_CASE("presets: full-scale defaults and the desk variant") {
  const ScenarioConfig paper = ScenarioConfig::preset("paper");
  CHECK(paper.world.n_ues == 25);
  CHECK(paper.world.m_agents == 4);
  CHECK(paper.world.k_nonagents == 3);
  CHECK(paper.world.episode_steps == 40);
  CHECK(paper.world.beamwidth_deg == 80.0);
  CHECK(paper.train.epochs == 50000);
  CHECK(paper.train.lr == 0.001);
  CHECK(paper.train.target_update_cycle == 20);
  CHECK(paper.train.hidden == 64);
  CHECK(paper.train.dense_layers == 6);
  CHECK_NOTHROW(paper.validate());

  const ScenarioConfig desk = ScenarioConfig::preset("desk");
  CHECK(desk.world.n_ues == 8);
  CHECK(desk.world.m_agents == 2);
  CHECK(desk.world.k_nonagents == 1);
  CHECK(desk.train.epochs == 3000);
  CHECK_NOTHROW(desk.validate());

  CHECK_THROWS_AS(ScenarioConfig::preset("nope"), std::invalid_argument);
}

TEST_CASE("set/get round trips across value kinds") {
  ScenarioConfig c;
  c.set("world.n_ues", "12");
  CHECK(c.world.n_ues == 12);
  CHECK(c.get("world.n_ues") == "12");

  c.set("radio.a_db", "30.25");
  CHECK(c.radio.budget.a_db == 30.25);

  c.set("world.fomdp", "true");
  CHECK(c.world.fomdp);
  c.set("world.fomdp", "0");
  CHECK_FALSE(c.world.fomdp);

  c.set("world.altitude_levels_m", "1000, 2000, 3000");
  REQUIRE(c.world.altitude_levels_m.size() == 3);
  CHECK(c.world.altitude_levels_m[2] == 3000.0);

  c.set("run.method", "comp2");
  CHECK(c.method == marl::Method::Comp2);
  CHECK(c.get("run.method") == "Comp2");

  c.set("run.mode", "fomdp");
  CHECK(c.mode == Mode::FOMDP);
  CHECK(c.effective_world().fomdp);

  c.set("train.comm_mean", "exclude-leader");
  CHECK(c.train.comm_mean == marl::CommMean::ExcludeLeader);

  c.set("world.overlap_formula", "as-printed");
  CHECK(c.world.overlap_formula == world::OverlapFormula::AsPrinted);
  c.set("energy.cruise_formula", "as-printed");
  CHECK(c.energy.cruise_formula == energy::CruiseFormula::AsPrinted);
  c.set("radio.coverage_formula", "as-printed");
  CHECK(c.radio.coverage_formula == radio::CoverageFormula::AsPrinted);

  c.set("run.output_dir", "runs/somewhere else");
  CHECK(c.output_dir == "runs/somewhere else");
}

TEST_CASE("master seed assigns both component seeds") {
  ScenarioConfig c;
  c.set("run.seed", "777");
  CHECK(c.world.seed == 777);
  CHECK(c.train.seed == 777);
  // component seeds remain individually addressable
  c.set("world.seed", "1");
  c.set("train.seed", "2");
  CHECK(c.world.seed == 1);
  CHECK(c.train.seed == 2);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  ScenarioConfig c;
  CHECK_THROWS_AS(c.set("world.bogus", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("nosection.n_ues", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("n_ues", "1"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("world.n_ues", "three"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("world.n_ues", "3x"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("world.fomdp", "maybe"), std::invalid_argument);
  CHECK_THROWS_AS(c.set("run.method", "BogusMethod"), std::invalid_argument);
  CHECK_THROWS_AS(c.get("world.bogus"), std::invalid_argument);
}

TEST_CASE("canonical INI round trip") {
  ScenarioConfig a = ScenarioConfig::preset("desk");
  a.set("radio.a_db", "31.125");
  a.set("run.method", "Comp1");
  a.set("world.malfunction_prob", "0.07");
  const char* path = "config_roundtrip_test.ini";
  a.write_ini(path);

  ScenarioConfig b;
  b.load_overlay(path);
  CHECK(b.to_ini() == a.to_ini());
  CHECK(b.config_hash() == a.config_hash());
  CHECK(b.radio.budget.a_db == 31.125);
  CHECK(b.method == marl::Method::Comp1);
  std::remove(path);
}

TEST_CASE("overlay parsing: comments, sections, errors") {
  const char* path = "config_overlay_test.ini";
  {
    std::ofstream out(path);
    out << "# comment\n; another comment\n\n[world]\nn_ues = 5\n"
        << "  m_agents =   3  \n[train]\nepochs = 17\n";
  }
  ScenarioConfig c;
  c.load_overlay(path);
  CHECK(c.world.n_ues == 5);
  CHECK(c.world.m_agents == 3);
  CHECK(c.train.epochs == 17);

  {
    std::ofstream out(path);
    out << "n_ues = 5\n";  // key before any section
  }
  ScenarioConfig d;
  CHECK_THROWS_AS(d.load_overlay(path), std::invalid_argument);
  {
    std::ofstream out(path);
    out << "[world\nn_ues = 5\n";
  }
  CHECK_THROWS_AS(d.load_overlay(path), std::invalid_argument);
  CHECK_THROWS_AS(d.load_overlay("missing_config.ini"), std::invalid_argument);
  std::remove(path);
}

TEST_CASE("config hash tracks content; resume hash ignores the epoch target") {
  ScenarioConfig a = ScenarioConfig::preset("desk");
  ScenarioConfig b = ScenarioConfig::preset("desk");
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.resume_hash() == b.resume_hash());
  b.set("train.epochs", "123456");
  CHECK(a.config_hash() != b.config_hash());
  CHECK(a.resume_hash() == b.resume_hash());
  b.set("world.n_ues", "9");
  CHECK(a.resume_hash() != b.resume_hash());
}

TEST_CASE("mcs_table key loads a table file") {
  const char* path = "config_mcs_test.txt";
  {
    std::ofstream out(path);
    out << "-78 MCS0 27.5\n-68 MCS1 385\n";
  }
  ScenarioConfig c;
  c.set("radio.mcs_table", path);
  CHECK(c.radio.mcs.rows.size() == 2);
  CHECK(c.get("radio.mcs_table") == path);
  c.set("radio.mcs_table", "");
  CHECK(c.radio.mcs.rows.size() == 12);  // back to the embedded table
  CHECK_THROWS_AS(c.set("radio.mcs_table", "missing_mcs.txt"), std::invalid_argument);
  std::remove(path);
}

TEST_CASE("validate rejects inconsistent scenarios") {
  ScenarioConfig c;
  c.world.m_agents = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  ScenarioConfig d;
  d.train.gamma = 1.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  ScenarioConfig e;
  e.radio.budget.g_tx_dbi = 30.0;  // EIRP above the cap
  CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}
