#include "cgym/gridworld.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <functional>

#include "cgym/random.hpp"

namespace cgym {

namespace {

constexpr int kGenerationRetries = 100;
constexpr int kFourRoomsSide = 19;
constexpr int kMultiRoomSide = 25;
constexpr int kKeyCorridorColumns = 3;

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("unknown task: " + std::string(whole));
  }
  return value;
}

Color random_color(Rng& rng) { return static_cast<Color>(rand_int(rng, 0, kColorCount)); }

// Incremental layout helper shared by the family generators.
class Builder {
 public:
  Builder(const TaskId& task, int rows, int cols, Rng& rng) : rng_(rng) {
    state_.task = task;
    state_.rows = rows;
    state_.cols = cols;
    state_.grid.assign(static_cast<std::size_t>(rows * cols), Tile::empty());
    state_.max_steps = max_steps(task);
  }

  WorldState& state() { return state_; }
  Rng& rng() { return rng_; }

  void set(int row, int col, Tile tile) { state_.at({row, col}) = tile; }
  const Tile& get(int row, int col) const { return state_.at({row, col}); }

  void horizontal_wall(int row, int col, int length) {
    for (int c = col; c < col + length; ++c) set(row, c, Tile::wall());
  }
  void vertical_wall(int row, int col, int length) {
    for (int r = row; r < row + length; ++r) set(r, col, Tile::wall());
  }
  void wall_rect(int row, int col, int height, int width) {
    horizontal_wall(row, col, width);
    horizontal_wall(row + height - 1, col, width);
    vertical_wall(row, col, height);
    vertical_wall(row, col + width - 1, height);
  }

  bool free_cell(Position p) const {
    return state_.at(p).object == ObjectType::Empty && !(agent_placed_ && state_.agent == p);
  }

  // Uniform free cell inside the half-open rectangle; throws when none exists.
  Position random_free_cell(int row, int col, int height, int width) {
    std::vector<Position> candidates;
    for (int r = row; r < row + height; ++r) {
      for (int c = col; c < col + width; ++c) {
        if (state_.inside({r, c}) && free_cell({r, c})) candidates.push_back({r, c});
      }
    }
    if (candidates.empty()) throw GenerationError("no free cell for placement");
    return candidates[static_cast<std::size_t>(rand_int(rng_, 0, static_cast<int>(candidates.size())))];
  }

  Position place(Tile tile, int row, int col, int height, int width) {
    Position p = random_free_cell(row, col, height, width);
    state_.at(p) = tile;
    return p;
  }

  void place_agent(int row, int col, int height, int width) {
    state_.agent = random_free_cell(row, col, height, width);
    state_.direction = rand_int(rng_, 0, 4);
    agent_placed_ = true;
  }

  WorldState finish() { return std::move(state_); }

 private:
  WorldState state_;
  Rng& rng_;
  bool agent_placed_ = false;
};

WorldState generate_empty(const TaskId& task, Rng& rng) {
  const int n = task.size;
  Builder b(task, n, n, rng);
  b.wall_rect(0, 0, n, n);
  b.set(n - 2, n - 2, Tile::goal());
  b.place_agent(1, 1, n - 2, n - 2);
  return b.finish();
}

WorldState generate_four_rooms(const TaskId& task, Rng& rng) {
  const int n = kFourRoomsSide;
  Builder b(task, n, n, rng);
  b.wall_rect(0, 0, n, n);
  const int room = n / 2;
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const int left = i * room;
      const int top = j * room;
      const int right = left + room;
      const int bottom = top + room;
      if (i + 1 < 2) {
        b.vertical_wall(top, right, room);
        b.set(rand_int(rng, top + 1, bottom), right, Tile::empty());
      }
      if (j + 1 < 2) {
        b.horizontal_wall(bottom, left, room);
        b.set(bottom, rand_int(rng, left + 1, right), Tile::empty());
      }
    }
  }
  b.place_agent(1, 1, n - 2, n - 2);
  b.place(Tile::goal(), 1, 1, n - 2, n - 2);
  return b.finish();
}

WorldState generate_door_key(const TaskId& task, Rng& rng) {
  const int n = task.size;
  Builder b(task, n, n, rng);
  b.wall_rect(0, 0, n, n);
  b.set(n - 2, n - 2, Tile::goal());
  const int split = rand_int(rng, 2, n - 2);
  b.vertical_wall(0, split, n);
  b.place_agent(0, 0, n, split);
  const Color color = random_color(rng);
  b.set(rand_int(rng, 1, n - 2), split, Tile::door(color, DoorState::Locked));
  b.place(Tile::key(color), 0, 0, n, split);
  return b.finish();
}

// Rectangles include their wall ring.
struct Rect {
  int top, left, height, width;
  int bottom() const { return top + height - 1; }
  int right() const { return left + width - 1; }
  bool contains(Position p) const {
    return p.row >= top && p.row <= bottom() && p.col >= left && p.col <= right();
  }
  bool on_border(Position p) const {
    return contains(p) && (p.row == top || p.row == bottom() || p.col == left || p.col == right());
  }
};

// Two rooms may touch along wall cells but never share interior cells.
bool rooms_compatible(const Rect& a, const Rect& b) {
  const int top = std::max(a.top, b.top);
  const int bottom = std::min(a.bottom(), b.bottom());
  const int left = std::max(a.left, b.left);
  const int right = std::min(a.right(), b.right());
  for (int r = top; r <= bottom; ++r) {
    for (int c = left; c <= right; ++c) {
      if (!a.on_border({r, c}) || !b.on_border({r, c})) return false;
    }
  }
  return true;
}

class MultiRoomPlanner {
 public:
  MultiRoomPlanner(int room_count, int max_room, Rng& rng)
      : room_count_(room_count), max_room_(max_room), rng_(rng) {}

  bool plan() {
    rooms_.clear();
    doors_.clear();
    const int h = rand_int(rng_, 4, max_room_ + 1);
    const int w = rand_int(rng_, 4, max_room_ + 1);
    Rect first{rand_int(rng_, 0, kMultiRoomSide - h + 1), rand_int(rng_, 0, kMultiRoomSide - w + 1), h, w};
    rooms_.push_back(first);
    return extend(-1);
  }

  const std::vector<Rect>& rooms() const { return rooms_; }
  const std::vector<Position>& doors() const { return doors_; }

 private:
  // `entry_side` is the wall of the last room that already holds its entry door.
  bool extend(int entry_side) {
    if (static_cast<int>(rooms_.size()) == room_count_) return true;
    const Rect prev = rooms_.back();
    for (int attempt = 0; attempt < 8; ++attempt) {
      int side = rand_int(rng_, 0, 4);
      if (side == entry_side) continue;
      Position door;
      switch (side) {
        case 0: door = {rand_int(rng_, prev.top + 1, prev.bottom()), prev.right()}; break;
        case 1: door = {prev.bottom(), rand_int(rng_, prev.left + 1, prev.right())}; break;
        case 2: door = {rand_int(rng_, prev.top + 1, prev.bottom()), prev.left}; break;
        default: door = {prev.top, rand_int(rng_, prev.left + 1, prev.right())}; break;
      }
      const int h = rand_int(rng_, 4, max_room_ + 1);
      const int w = rand_int(rng_, 4, max_room_ + 1);
      Rect next{0, 0, h, w};
      switch (side) {
        case 0:
          next.left = door.col;
          next.top = door.row - rand_int(rng_, 1, h - 1);
          break;
        case 1:
          next.top = door.row;
          next.left = door.col - rand_int(rng_, 1, w - 1);
          break;
        case 2:
          next.left = door.col - w + 1;
          next.top = door.row - rand_int(rng_, 1, h - 1);
          break;
        default:
          next.top = door.row - h + 1;
          next.left = door.col - rand_int(rng_, 1, w - 1);
          break;
      }
      if (next.top < 0 || next.left < 0 || next.bottom() >= kMultiRoomSide ||
          next.right() >= kMultiRoomSide) {
        continue;
      }
      bool fits = true;
      for (const Rect& other : rooms_) fits = fits && rooms_compatible(next, other);
      if (!fits) continue;
      rooms_.push_back(next);
      doors_.push_back(door);
      if (extend((side + 2) % 4)) return true;
      rooms_.pop_back();
      doors_.pop_back();
    }
    return false;
  }

  int room_count_;
  int max_room_;
  Rng& rng_;
  std::vector<Rect> rooms_;
  std::vector<Position> doors_;
};

WorldState generate_multi_room(const TaskId& task, Rng& rng) {
  MultiRoomPlanner planner(task.rooms, task.size, rng);
  bool planned = false;
  for (int attempt = 0; attempt < kGenerationRetries && !planned; ++attempt) planned = planner.plan();
  if (!planned) throw GenerationError("MultiRoom layout not found within retry budget");

  const int n = kMultiRoomSide;
  Builder b(task, n, n, rng);
  // Cells outside every room are solid.
  for (int r = 0; r < n; ++r) b.horizontal_wall(r, 0, n);
  for (const Rect& room : planner.rooms()) {
    for (int r = room.top + 1; r < room.bottom(); ++r) {
      for (int c = room.left + 1; c < room.right(); ++c) b.set(r, c, Tile::empty());
    }
  }
  std::optional<Color> previous;
  for (const Position& door : planner.doors()) {
    Color color = random_color(rng);
    while (previous && color == *previous) color = random_color(rng);
    previous = color;
    b.set(door.row, door.col, Tile::door(color, DoorState::Closed));
  }
  const Rect& first = planner.rooms().front();
  const Rect& last = planner.rooms().back();
  b.place_agent(first.top + 1, first.left + 1, first.height - 2, first.width - 2);
  b.place(Tile::goal(), last.top + 1, last.left + 1, last.height - 2, last.width - 2);
  return b.finish();
}

// Room grid with 3 columns and `rows` rows of rooms sharing walls.
class RoomGrid {
 public:
  struct Room {
    Position top_left;
    std::array<Position, 4> door_pos{};
    std::array<bool, 4> connected{};
    bool locked = false;
  };

  RoomGrid(int room_size, int rows, Rng& rng) : size_(room_size), rows_(rows) {
    rooms_.resize(static_cast<std::size_t>(rows * kKeyCorridorColumns));
    for (int j = 0; j < rows_; ++j) {
      for (int i = 0; i < kKeyCorridorColumns; ++i) {
        Room& room = get(i, j);
        room.top_left = {j * (size_ - 1), i * (size_ - 1)};
        const Position tl = room.top_left;
        if (i + 1 < kKeyCorridorColumns) {
          room.door_pos[0] = {rand_int(rng, tl.row + 1, tl.row + size_ - 1), tl.col + size_ - 1};
        }
        if (j + 1 < rows_) {
          room.door_pos[1] = {tl.row + size_ - 1, rand_int(rng, tl.col + 1, tl.col + size_ - 1)};
        }
        if (i > 0) room.door_pos[2] = get(i - 1, j).door_pos[0];
        if (j > 0) room.door_pos[3] = get(i, j - 1).door_pos[1];
      }
    }
  }

  int rows() const { return rows_; }
  int size() const { return size_; }
  Room& get(int col, int row) { return rooms_[static_cast<std::size_t>(row * kKeyCorridorColumns + col)]; }

  bool has_neighbor(int col, int row, int side) const {
    switch (side) {
      case 0: return col + 1 < kKeyCorridorColumns;
      case 1: return row + 1 < rows_;
      case 2: return col > 0;
      default: return row > 0;
    }
  }
  static std::pair<int, int> neighbor(int col, int row, int side) {
    switch (side) {
      case 0: return {col + 1, row};
      case 1: return {col, row + 1};
      case 2: return {col - 1, row};
      default: return {col, row - 1};
    }
  }

  void link(int col, int row, int side) {
    get(col, row).connected[static_cast<std::size_t>(side)] = true;
    auto [nc, nr] = neighbor(col, row, side);
    get(nc, nr).connected[static_cast<std::size_t>((side + 2) % 4)] = true;
  }

  std::size_t reachable_count(int col, int row) {
    std::vector<bool> seen(rooms_.size(), false);
    std::vector<std::pair<int, int>> stack{{col, row}};
    std::size_t count = 0;
    while (!stack.empty()) {
      auto [c, r] = stack.back();
      stack.pop_back();
      const auto idx = static_cast<std::size_t>(r * kKeyCorridorColumns + c);
      if (seen[idx]) continue;
      seen[idx] = true;
      ++count;
      for (int side = 0; side < 4; ++side) {
        if (get(c, r).connected[static_cast<std::size_t>(side)]) stack.push_back(neighbor(c, r, side));
      }
    }
    return count;
  }

  std::size_t room_count() const { return rooms_.size(); }

 private:
  int size_;
  int rows_;
  std::vector<Room> rooms_;
};

WorldState generate_key_corridor_once(const TaskId& task, Rng& rng) {
  const int s = task.size;
  const int rows = task.rooms;
  const auto [height, width] = grid_extent(task);
  Builder b(task, height, width, rng);
  RoomGrid rooms(s, rows, rng);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < kKeyCorridorColumns; ++i) {
      const Position tl = rooms.get(i, j).top_left;
      b.wall_rect(tl.row, tl.col, s, s);
    }
  }
  auto interior = [&](int col, int row, Tile tile) {
    const Position tl = rooms.get(col, row).top_left;
    return b.place(tile, tl.row + 1, tl.col + 1, s - 2, s - 2);
  };

  // Middle column becomes one corridor.
  for (int j = 1; j < rows; ++j) {
    const Position tl = rooms.get(1, j).top_left;
    for (int c = tl.col + 1; c < tl.col + s - 1; ++c) b.set(tl.row, c, Tile::empty());
    rooms.link(1, j, 3);
  }

  const int locked_row = rand_int(rng, 0, rows);
  const Color lock_color = random_color(rng);
  {
    RoomGrid::Room& room = rooms.get(2, locked_row);
    const Position door = room.door_pos[2];
    b.set(door.row, door.col, Tile::door(lock_color, DoorState::Locked));
    rooms.link(2, locked_row, 2);
    room.locked = true;
  }
  interior(2, locked_row, Tile::ball(random_color(rng)));
  interior(0, rand_int(rng, 0, rows), Tile::key(lock_color));
  {
    const Position tl = rooms.get(1, rows / 2).top_left;
    b.place_agent(tl.row + 1, tl.col + 1, s - 2, s - 2);
  }

  // Add closed doors between random neighbors until every room is reachable.
  const int start_row = rows / 2;
  int iterations = 0;
  while (rooms.reachable_count(1, start_row) < rooms.room_count()) {
    if (++iterations > 5000) throw GenerationError("KeyCorridor rooms could not be connected");
    const int i = rand_int(rng, 0, kKeyCorridorColumns);
    const int j = rand_int(rng, 0, rows);
    const int side = rand_int(rng, 0, 4);
    if (!rooms.has_neighbor(i, j, side)) continue;
    RoomGrid::Room& room = rooms.get(i, j);
    if (room.connected[static_cast<std::size_t>(side)]) continue;
    auto [nc, nr] = RoomGrid::neighbor(i, j, side);
    if (room.locked || rooms.get(nc, nr).locked) continue;
    const Position door = room.door_pos[static_cast<std::size_t>(side)];
    b.set(door.row, door.col, Tile::door(random_color(rng), DoorState::Closed));
    rooms.link(i, j, side);
  }
  return b.finish();
}

WorldState generate_key_corridor(const TaskId& task, Rng& rng) {
  for (int attempt = 0; attempt < kGenerationRetries; ++attempt) {
    try {
      return generate_key_corridor_once(task, rng);
    } catch (const GenerationError&) {
    }
  }
  throw GenerationError("KeyCorridor layout not found within retry budget");
}

bool is_catalog_task(const TaskId& task) {
  for (const TaskInfo& info : task_catalog()) {
    if (info.id == task) return true;
  }
  return false;
}

}  // namespace

std::string TaskId::name() const {
  switch (family) {
    case Family::Empty:
      return "Empty-" + std::to_string(size) + "x" + std::to_string(size);
    case Family::FourRooms:
      return "FourRooms";
    case Family::DoorKey:
      return "DoorKey-" + std::to_string(size) + "x" + std::to_string(size);
    case Family::MultiRoom:
      return "MultiRoom-N" + std::to_string(rooms) + "-S" + std::to_string(size);
    case Family::KeyCorridor:
      return "KeyCorridor-S" + std::to_string(size) + "R" + std::to_string(rooms);
  }
  return "?";
}

TaskId TaskId::parse(std::string_view name) {
  auto square = [&](std::string_view rest) {
    const auto x = rest.find('x');
    if (x == std::string_view::npos) throw std::invalid_argument("unknown task: " + std::string(name));
    const int a = parse_int(rest.substr(0, x), name);
    const int b = parse_int(rest.substr(x + 1), name);
    if (a != b) throw std::invalid_argument("unknown task: " + std::string(name));
    return a;
  };
  TaskId id;
  if (name.starts_with("Empty-")) {
    id = {Family::Empty, square(name.substr(6)), 0};
  } else if (name == "FourRooms") {
    id = {Family::FourRooms, kFourRoomsSide, 0};
  } else if (name.starts_with("DoorKey-")) {
    id = {Family::DoorKey, square(name.substr(8)), 0};
  } else if (name.starts_with("MultiRoom-N")) {
    std::string_view rest = name.substr(11);
    const auto s = rest.find('S');
    if (s == std::string_view::npos) throw std::invalid_argument("unknown task: " + std::string(name));
    std::string_view n = rest.substr(0, s);
    if (n.ends_with('-')) n.remove_suffix(1);
    id = {Family::MultiRoom, parse_int(rest.substr(s + 1), name), parse_int(n, name)};
  } else if (name.starts_with("KeyCorridor-S")) {
    std::string_view rest = name.substr(13);
    const auto r = rest.find('R');
    if (r == std::string_view::npos) throw std::invalid_argument("unknown task: " + std::string(name));
    id = {Family::KeyCorridor, parse_int(rest.substr(0, r), name), parse_int(rest.substr(r + 1), name)};
  } else {
    throw std::invalid_argument("unknown task: " + std::string(name));
  }
  if (!is_catalog_task(id)) throw std::invalid_argument("task not in catalog: " + std::string(name));
  return id;
}

std::vector<TaskInfo> task_catalog() {
  static const std::vector<TaskId> ids = {
      {Family::Empty, 5, 0},       {Family::Empty, 6, 0},       {Family::Empty, 8, 0},
      {Family::Empty, 16, 0},      {Family::FourRooms, 19, 0},  {Family::DoorKey, 5, 0},
      {Family::DoorKey, 6, 0},     {Family::DoorKey, 8, 0},     {Family::DoorKey, 16, 0},
      {Family::MultiRoom, 4, 2},   {Family::MultiRoom, 5, 4},   {Family::MultiRoom, 10, 6},
      {Family::KeyCorridor, 3, 1}, {Family::KeyCorridor, 3, 2}, {Family::KeyCorridor, 3, 3},
      {Family::KeyCorridor, 4, 3}, {Family::KeyCorridor, 5, 3}, {Family::KeyCorridor, 6, 3},
  };
  std::vector<TaskInfo> out;
  out.reserve(ids.size());
  for (const TaskId& id : ids) {
    const auto [rows, cols] = grid_extent(id);
    out.push_back({id, rows, cols, max_steps(id)});
  }
  return out;
}

std::pair<int, int> grid_extent(const TaskId& task) {
  switch (task.family) {
    case Family::Empty:
    case Family::DoorKey:
      return {task.size, task.size};
    case Family::FourRooms:
      return {kFourRoomsSide, kFourRoomsSide};
    case Family::MultiRoom:
      return {kMultiRoomSide, kMultiRoomSide};
    case Family::KeyCorridor:
      return {(task.size - 1) * task.rooms + 1, (task.size - 1) * kKeyCorridorColumns + 1};
  }
  return {0, 0};
}

int max_steps(const TaskId& task) {
  switch (task.family) {
    case Family::Empty: return 4 * task.size * task.size;
    case Family::FourRooms: return 100;
    case Family::DoorKey: return 10 * task.size * task.size;
    case Family::MultiRoom: return 20 * task.rooms;
    case Family::KeyCorridor: return 30 * task.size * task.size;
  }
  return 0;
}

Position step_towards(Position p, int direction) {
  switch (direction) {
    case 0: return {p.row, p.col + 1};
    case 1: return {p.row + 1, p.col};
    case 2: return {p.row, p.col - 1};
    default: return {p.row - 1, p.col};
  }
}

Action action_from_index(int index) {
  if (index < 0 || index >= kActionCount) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside 0..5");
  }
  return static_cast<Action>(index);
}

WorldState generate(const TaskId& task, std::uint64_t seed) {
  Rng rng(seed);
  WorldState state;
  switch (task.family) {
    case Family::Empty: state = generate_empty(task, rng); break;
    case Family::FourRooms: state = generate_four_rooms(task, rng); break;
    case Family::DoorKey: state = generate_door_key(task, rng); break;
    case Family::MultiRoom: state = generate_multi_room(task, rng); break;
    case Family::KeyCorridor: state = generate_key_corridor(task, rng); break;
  }
  state.seed = seed;
  return state;
}

double success_reward(int step_count, int max_steps) {
  // 1 - 0.9 * step / max, arranged so the last step gives exactly 0.1
  return 0.1 + 0.9 * (static_cast<double>(max_steps - step_count) / static_cast<double>(max_steps));
}

MoveResult advance(WorldState& state, Action action) {
  if (state.done) throw std::logic_error("step on a finished episode");
  ++state.step_count;
  bool success = false;
  const Position ahead = state.front();
  const bool ahead_inside = state.inside(ahead);

  switch (action) {
    case Action::TurnLeft:
      state.direction = (state.direction + 3) % 4;
      break;
    case Action::TurnRight:
      state.direction = (state.direction + 1) % 4;
      break;
    case Action::Forward:
      if (ahead_inside && state.at(ahead).is_walkable()) {
        state.agent = ahead;
        success = state.at(ahead).object == ObjectType::Goal;
      }
      break;
    case Action::Pickup:
      if (ahead_inside && !state.carried && state.at(ahead).is_pickable()) {
        state.carried = state.at(ahead);
        state.at(ahead) = Tile::empty();
        success = state.task.family == Family::KeyCorridor && state.carried->object == ObjectType::Ball;
      }
      break;
    case Action::Drop:
      if (ahead_inside && state.carried && state.at(ahead).object == ObjectType::Empty) {
        state.at(ahead) = *state.carried;
        state.carried.reset();
      }
      break;
    case Action::Toggle:
      if (ahead_inside && state.at(ahead).is_door()) {
        Tile& door = state.at(ahead);
        const auto locked = static_cast<std::uint8_t>(DoorState::Locked);
        const auto open = static_cast<std::uint8_t>(DoorState::Open);
        const auto closed = static_cast<std::uint8_t>(DoorState::Closed);
        if (door.state == locked) {
          if (state.carried && state.carried->object == ObjectType::Key && state.carried->color == door.color) {
            door.state = open;
          }
        } else {
          door.state = door.state == open ? closed : open;
        }
      }
      break;
  }

  MoveResult result;
  if (success) {
    result.reward = success_reward(state.step_count, state.max_steps);
    result.done = true;
    result.reason = Termination::Success;
  } else if (state.step_count >= state.max_steps) {
    result.done = true;
    result.reason = Termination::StepLimit;
  }
  state.done = result.done;
  return result;
}

StepOutcome step(WorldState& state, int action) {
  const Action a = action_from_index(action);
  const MoveResult moved = advance(state, a);
  StepOutcome out;
  out.observation = encode(state);
  out.reward = moved.reward;
  out.done = moved.done;
  out.reason = moved.reason;
  return out;
}

namespace {

template <typename Out, typename Convert>
void encode_canvas(const WorldState& state, Out* out, Convert convert) {
  for (int r = 0; r < kCanvasSide; ++r) {
    for (int c = 0; c < kCanvasSide; ++c) {
      Tile tile = Tile::wall();
      if (r < state.rows && c < state.cols) tile = state.at({r, c});
      if (state.agent == Position{r, c}) {
        tile = {ObjectType::Agent, Color::Red, static_cast<std::uint8_t>(state.direction)};
      }
      Out* cell = out + (r * kCanvasSide + c) * kTileChannels;
      cell[0] = convert(static_cast<std::uint8_t>(tile.object));
      cell[1] = convert(static_cast<std::uint8_t>(tile.color));
      cell[2] = convert(tile.state);
    }
  }
}

}  // namespace

Observation encode(const WorldState& state) {
  Observation obs{};
  encode_canvas(state, obs.data(), [](std::uint8_t v) { return v; });
  return obs;
}

void encode_into(const WorldState& state, std::span<float> out, float scale) {
  if (out.size() != static_cast<std::size_t>(kObservationSize)) {
    throw std::invalid_argument("observation buffer must hold 1875 values");
  }
  encode_canvas(state, out.data(), [scale](std::uint8_t v) { return static_cast<float>(v) * scale; });
}

std::string render_ascii(const WorldState& state) {
  static constexpr std::array<char, 4> kAgent = {'>', 'v', '<', '^'};
  std::string out;
  out.reserve(static_cast<std::size_t>((state.cols + 1) * state.rows));
  for (int r = 0; r < state.rows; ++r) {
    for (int c = 0; c < state.cols; ++c) {
      if (state.agent == Position{r, c}) {
        out.push_back(kAgent[static_cast<std::size_t>(state.direction)]);
        continue;
      }
      const Tile& t = state.at({r, c});
      char ch = '.';
      switch (t.object) {
        case ObjectType::Empty: ch = '.'; break;
        case ObjectType::Wall: ch = '#'; break;
        case ObjectType::Floor: ch = '_'; break;
        case ObjectType::Door: ch = t.state == 0 ? '/' : (t.state == 1 ? 'D' : 'L'); break;
        case ObjectType::Key: ch = 'K'; break;
        case ObjectType::Ball: ch = 'B'; break;
        case ObjectType::Goal: ch = 'G'; break;
        case ObjectType::Agent: ch = '@'; break;
      }
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace cgym
