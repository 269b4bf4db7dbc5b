#ifndef CGYM_GRIDWORLD_HPP_
#define CGYM_GRIDWORLD_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cgym {

// Fully observable MiniGrid-style worlds. Every task is drawn onto a fixed
// 25x25 canvas so that a single network input layer serves all tasks.

inline constexpr int kCanvasSide = 25;
inline constexpr int kTileChannels = 3;
inline constexpr int kObservationSize = kCanvasSide * kCanvasSide * kTileChannels;
inline constexpr int kActionCount = 6;

enum class Family : std::uint8_t { Empty, FourRooms, DoorKey, MultiRoom, KeyCorridor };

// Empty/DoorKey use `size` as grid side. MultiRoom uses `rooms` (N) and
// `size` (max room side S). KeyCorridor uses `size` (room side S) and
// `rooms` (number of room rows R).
struct TaskId {
  Family family = Family::Empty;
  int size = 5;
  int rooms = 0;

  std::string name() const;
  static TaskId parse(std::string_view name);

  friend bool operator==(const TaskId&, const TaskId&) = default;
};

struct TaskInfo {
  TaskId id;
  int rows;
  int cols;
  int max_steps;
};

/// All 18 tasks in a fixed order.
std::vector<TaskInfo> task_catalog();

/// Native grid extent (rows, cols). Only KeyCorridor is non-square.
std::pair<int, int> grid_extent(const TaskId& task);
int max_steps(const TaskId& task);

enum class ObjectType : std::uint8_t {
  Empty = 0,
  Wall = 1,
  Floor = 2,
  Door = 3,
  Key = 4,
  Ball = 5,
  Goal = 6,
  Agent = 7,
};

enum class Color : std::uint8_t { Red = 0, Green, Blue, Purple, Yellow, Grey };
inline constexpr int kColorCount = 6;

enum class DoorState : std::uint8_t { Open = 0, Closed = 1, Locked = 2 };

struct Tile {
  ObjectType object = ObjectType::Empty;
  Color color = Color::Red;
  std::uint8_t state = 0;

  static constexpr Tile empty() { return {}; }
  static constexpr Tile wall() { return {ObjectType::Wall, Color::Red, 0}; }
  static constexpr Tile goal() { return {ObjectType::Goal, Color::Green, 0}; }
  static constexpr Tile key(Color c) { return {ObjectType::Key, c, 0}; }
  static constexpr Tile ball(Color c) { return {ObjectType::Ball, c, 0}; }
  static constexpr Tile door(Color c, DoorState s) {
    return {ObjectType::Door, c, static_cast<std::uint8_t>(s)};
  }

  bool is_door() const { return object == ObjectType::Door; }
  bool is_pickable() const { return object == ObjectType::Key || object == ObjectType::Ball; }
  bool is_walkable() const {
    return object == ObjectType::Empty || object == ObjectType::Floor ||
           object == ObjectType::Goal ||
           (is_door() && state == static_cast<std::uint8_t>(DoorState::Open));
  }

  friend bool operator==(const Tile&, const Tile&) = default;
};

struct Position {
  int row = 0;
  int col = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

// 0 right, 1 down, 2 left, 3 up.
Position step_towards(Position p, int direction);

enum class Action : std::uint8_t {
  TurnLeft = 0,
  TurnRight = 1,
  Forward = 2,
  Pickup = 3,
  Drop = 4,
  Toggle = 5,
};

/// Throws std::out_of_range for indices outside 0..5.
Action action_from_index(int index);

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldState {
  TaskId task;
  int rows = 0;
  int cols = 0;
  std::vector<Tile> grid;  // rows*cols, row-major
  Position agent;
  int direction = 0;
  std::optional<Tile> carried;
  int step_count = 0;
  int max_steps = 0;
  bool done = false;
  std::uint64_t seed = 0;

  const Tile& at(Position p) const { return grid[static_cast<std::size_t>(p.row * cols + p.col)]; }
  Tile& at(Position p) { return grid[static_cast<std::size_t>(p.row * cols + p.col)]; }
  bool inside(Position p) const { return p.row >= 0 && p.col >= 0 && p.row < rows && p.col < cols; }
  Position front() const { return step_towards(agent, direction); }
};

using Observation = std::array<std::uint8_t, kObservationSize>;

enum class Termination : std::uint8_t { None, Success, StepLimit };

struct StepOutcome {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  Termination reason = Termination::None;
};

/// Solvable instance of `task`; identical seeds give identical layouts.
WorldState generate(const TaskId& task, std::uint64_t seed);

/// Reward for success after `step_count` of `max_steps` steps.
double success_reward(int step_count, int max_steps);

/// Reward/termination only; no observation is built.
struct MoveResult {
  double reward = 0.0;
  bool done = false;
  Termination reason = Termination::None;
};
MoveResult advance(WorldState& state, Action action);

/// Throws std::out_of_range on a bad action index and std::logic_error when
/// the episode is already over.
StepOutcome step(WorldState& state, int action);

Observation encode(const WorldState& state);

/// Writes the encoded observation scaled by `scale` (network input form).
void encode_into(const WorldState& state, std::span<float> out, float scale = 0.1f);

std::string render_ascii(const WorldState& state);

}  // namespace cgym

#endif  // CGYM_GRIDWORLD_HPP_
