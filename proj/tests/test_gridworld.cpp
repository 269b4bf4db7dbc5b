#include "doctest.h"

#include <algorithm>
#include <set>

#include "cgym/gridworld.hpp"
#include "cgym/random.hpp"
#include "oracles.hpp"

using namespace cgym;

namespace {

WorldState walled_room(int rows, int cols) {
  WorldState s;
  s.task = TaskId::parse("Empty-5x5");
  s.rows = rows;
  s.cols = cols;
  s.grid.assign(static_cast<std::size_t>(rows * cols), Tile::empty());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) s.at({r, c}) = Tile::wall();
    }
  }
  s.agent = {1, 1};
  s.direction = 0;
  s.max_steps = 100;
  return s;
}

int count(const WorldState& s, ObjectType type) {
  return static_cast<int>(std::count_if(s.grid.begin(), s.grid.end(), [&](const Tile& t) { return t.object == type; }));
}

}  // namespace

TEST_CASE("catalog holds the eighteen tasks with their step limits") {
  const auto catalog = task_catalog();
  REQUIRE(catalog.size() == 18);
  std::set<std::string> names;
  for (const auto& info : catalog) names.insert(info.id.name());
  CHECK(names.size() == 18);
  CHECK(max_steps(TaskId::parse("Empty-5x5")) == 100);
  CHECK(max_steps(TaskId::parse("DoorKey-8x8")) == 640);
  CHECK(max_steps(TaskId::parse("KeyCorridor-S6R3")) == 1080);
  CHECK(max_steps(TaskId::parse("FourRooms")) == 100);
  for (const auto& info : catalog) {
    CHECK(info.rows <= kCanvasSide);
    CHECK(info.cols <= kCanvasSide);
    CHECK(TaskId::parse(info.id.name()) == info.id);
  }
  CHECK_THROWS(TaskId::parse("Empty-7x7x"));
  CHECK_THROWS(TaskId::parse("Lava-5x5"));
}

TEST_CASE("success reward formula") {
  CHECK(success_reward(18, 640) == doctest::Approx(0.974688).epsilon(1e-6));
  CHECK(success_reward(28, 640) == doctest::Approx(0.960625).epsilon(1e-6));
  CHECK(success_reward(100, 100) == 0.1);  // exact, so rewards stay inside [0.1, 1)
  for (int m : {7, 100, 640, 1080}) CHECK(success_reward(m, m) >= 0.1);
  CHECK(success_reward(1, 100) == doctest::Approx(0.991));
}

TEST_CASE("generation is deterministic per seed") {
  for (const auto& info : task_catalog()) {
    const WorldState a = generate(info.id, 77);
    const WorldState b = generate(info.id, 77);
    CHECK(a.grid == b.grid);
    CHECK(a.agent == b.agent);
    CHECK(a.direction == b.direction);
    CHECK(encode(a) == encode(b));
  }
}

TEST_CASE("generated instances are solvable and well formed") {
  for (const auto& info : task_catalog()) {
    CAPTURE(info.id.name());
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      const WorldState s = generate(info.id, seed);
      REQUIRE(s.rows == info.rows);
      REQUIRE(s.cols == info.cols);
      CHECK(s.max_steps == info.max_steps);
      CHECK(s.at(s.agent).is_walkable());
      CHECK(s.at(s.agent).object != ObjectType::Goal);
      CHECK(oracle::solvable(s));
      for (int c = 0; c < s.cols; ++c) {
        CHECK(s.at({0, c}).object == ObjectType::Wall);
        CHECK(s.at({s.rows - 1, c}).object == ObjectType::Wall);
      }
      if (info.id.family == Family::KeyCorridor) {
        CHECK(count(s, ObjectType::Ball) == 1);
        std::vector<Tile> locked;
        for (const Tile& t : s.grid) {
          if (t.is_door() && t.state == static_cast<std::uint8_t>(DoorState::Locked)) locked.push_back(t);
        }
        REQUIRE(locked.size() == 1);
        const auto key = std::find_if(s.grid.begin(), s.grid.end(), [](const Tile& t) { return t.object == ObjectType::Key; });
        REQUIRE(key != s.grid.end());
        CHECK(key->color == locked.front().color);
      } else {
        CHECK(count(s, ObjectType::Goal) == 1);
      }
    }
  }
}

TEST_CASE("layouts vary across seeds") {
  for (const char* name : {"Empty-8x8", "FourRooms", "DoorKey-6x6", "MultiRoom-N4-S5", "KeyCorridor-S3R3"}) {
    std::set<std::vector<std::uint8_t>> distinct;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Observation o = encode(generate(TaskId::parse(name), seed));
      distinct.emplace(o.begin(), o.end());
    }
    CHECK(distinct.size() > 1);
  }
}

TEST_CASE("encoding pads with walls and marks the agent") {
  WorldState s = generate(TaskId::parse("Empty-5x5"), 3);
  const Observation o = encode(s);
  int padded = 0;
  for (int r = 0; r < kCanvasSide; ++r) {
    for (int c = 0; c < kCanvasSide; ++c) {
      if (r < 5 && c < 5) continue;
      const auto* cell = &o[static_cast<std::size_t>((r * kCanvasSide + c) * kTileChannels)];
      if (cell[0] == 1 && cell[1] == 0 && cell[2] == 0) ++padded;
    }
  }
  CHECK(padded == 600);
  for (int dir = 0; dir < 4; ++dir) {
    s.direction = dir;
    const Observation od = encode(s);
    const auto* cell = &od[static_cast<std::size_t>((s.agent.row * kCanvasSide + s.agent.col) * kTileChannels)];
    CHECK(cell[0] == 7);
    CHECK(cell[2] == dir);
  }
  std::array<float, kObservationSize> scaled{};
  encode_into(s, scaled);
  for (std::size_t i = 0; i < scaled.size(); ++i) CHECK(scaled[i] == doctest::Approx(0.1 * encode(s)[i]));
}

TEST_CASE("forward into a wall leaves the agent in place") {
  WorldState s = walled_room(5, 5);
  s.direction = 3;
  const StepOutcome out = step(s, 2);
  CHECK(s.agent == Position{1, 1});
  CHECK(out.reward == 0.0);
  CHECK_FALSE(out.done);
  CHECK(s.step_count == 1);
}

TEST_CASE("turning and moving") {
  WorldState s = walled_room(5, 5);
  step(s, 1);
  CHECK(s.direction == 1);
  step(s, 2);
  CHECK(s.agent == Position{2, 1});
  step(s, 0);
  step(s, 0);
  CHECK(s.direction == 3);
  step(s, 0);
  CHECK(s.direction == 2);
}

TEST_CASE("invalid action index is rejected") {
  WorldState s = walled_room(5, 5);
  CHECK_THROWS_AS(step(s, 6), std::out_of_range);
  CHECK_THROWS_AS(step(s, -1), std::out_of_range);
  CHECK(s.step_count == 0);
}

TEST_CASE("reaching the goal pays the success reward once") {
  WorldState s = walled_room(5, 5);
  s.at({1, 2}) = Tile::goal();
  s.step_count = 17;
  const StepOutcome out = step(s, 2);
  CHECK(out.done);
  CHECK(out.reason == Termination::Success);
  CHECK(out.reward == doctest::Approx(success_reward(18, 100)));
  CHECK_THROWS_AS(step(s, 2), std::logic_error);
}

TEST_CASE("goal on the last allowed step pays 0.1") {
  WorldState s = walled_room(5, 5);
  s.at({1, 2}) = Tile::goal();
  s.step_count = 99;
  const StepOutcome out = step(s, 2);
  CHECK(out.done);
  CHECK(out.reward == doctest::Approx(0.1));
}

TEST_CASE("step limit ends the episode without reward") {
  WorldState s = walled_room(5, 5);
  s.step_count = 99;
  const StepOutcome out = step(s, 0);
  CHECK(out.done);
  CHECK(out.reason == Termination::StepLimit);
  CHECK(out.reward == 0.0);
}

TEST_CASE("locked doors need the matching key") {
  WorldState s = walled_room(5, 6);
  s.at({1, 2}) = Tile::door(Color::Yellow, DoorState::Locked);
  step(s, 5);
  CHECK(s.at({1, 2}).state == static_cast<std::uint8_t>(DoorState::Locked));
  step(s, 2);
  CHECK(s.agent == Position{1, 1});

  s.carried = Tile::key(Color::Blue);
  step(s, 5);
  CHECK(s.at({1, 2}).state == static_cast<std::uint8_t>(DoorState::Locked));

  s.carried = Tile::key(Color::Yellow);
  step(s, 5);
  CHECK(s.at({1, 2}).state == static_cast<std::uint8_t>(DoorState::Open));
  step(s, 2);
  CHECK(s.agent == Position{1, 2});
}

TEST_CASE("toggling a closed door changes one observation value") {
  WorldState s = walled_room(5, 6);
  s.at({1, 2}) = Tile::door(Color::Green, DoorState::Closed);
  const Observation before = encode(s);
  const StepOutcome out = step(s, 5);
  int changed = 0;
  for (std::size_t i = 0; i < before.size(); ++i) changed += before[i] != out.observation[i];
  CHECK(changed == 1);
  step(s, 5);
  CHECK(encode(s) == before);
}

TEST_CASE("pickup and drop") {
  WorldState s = walled_room(5, 5);
  s.at({1, 2}) = Tile::key(Color::Purple);
  s.at({2, 1}) = Tile::ball(Color::Red);
  step(s, 3);
  REQUIRE(s.carried);
  CHECK(s.carried->object == ObjectType::Key);
  CHECK(s.at({1, 2}).object == ObjectType::Empty);

  step(s, 1);
  step(s, 3);
  CHECK(s.carried->object == ObjectType::Key);
  CHECK(s.at({2, 1}).object == ObjectType::Ball);

  step(s, 4);
  CHECK(s.carried->object == ObjectType::Key);

  step(s, 0);
  step(s, 4);
  CHECK_FALSE(s.carried);
  CHECK(s.at({1, 2}).object == ObjectType::Key);
}

TEST_CASE("picking up the ball solves a key corridor") {
  WorldState s = generate(TaskId::parse("KeyCorridor-S3R1"), 5);
  const auto it = std::find_if(s.grid.begin(), s.grid.end(), [](const Tile& t) { return t.object == ObjectType::Ball; });
  REQUIRE(it != s.grid.end());
  const int idx = static_cast<int>(it - s.grid.begin());
  const Position ball{idx / s.cols, idx % s.cols};
  // Put the agent next to the ball and face it. With room size 3 the only
  // neighbour may be the locked door, so open it and stand there.
  bool placed = false;
  for (int pass = 0; pass < 2 && !placed; ++pass) {
    for (int d = 0; d < 4 && !placed; ++d) {
      const Position p = step_towards(ball, (d + 2) % 4);
      if (!s.inside(p)) continue;
      Tile& t = s.grid[static_cast<std::size_t>(p.row * s.cols + p.col)];
      if (pass == 1 && t.is_door()) t.state = static_cast<std::uint8_t>(DoorState::Open);
      if (t.is_walkable()) {
        s.agent = p;
        s.direction = d;
        placed = true;
      }
    }
  }
  REQUIRE(s.front() == ball);
  s.carried.reset();
  const StepOutcome out = step(s, 3);
  CHECK(out.done);
  CHECK(out.reason == Termination::Success);
  CHECK(out.reward > 0.0);
}

TEST_CASE("random play conserves objects and stays in bounds") {
  Rng rng(9);
  for (const char* name : {"DoorKey-5x5", "KeyCorridor-S3R2", "MultiRoom-N2-S4"}) {
    WorldState s = generate(TaskId::parse(name), 4);
    const auto inventory = oracle::inventory(s);
    int nonzero = 0;
    while (!s.done) {
      const StepOutcome out = step(s, rand_int(rng, 0, kActionCount));
      nonzero += out.reward != 0.0;
      CHECK(s.inside(s.agent));
      CHECK(oracle::inventory(s) == inventory);
    }
    CHECK(s.step_count <= s.max_steps);
    CHECK(nonzero <= 1);
  }
}
