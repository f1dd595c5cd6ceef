#pragma once

// JSON encodings shared by session logs and the wire protocol.

#include <json.hpp>

#include "teachbot/guidance.hpp"
#include "teachbot/protocol.hpp"
#include "teachbot/skill.hpp"

namespace teachbot {

using nlohmann::json;

json vec2_to_json(const Vec2& v);
Vec2 vec2_from_json(const json& j);

void to_json(json& j, const TaskSpaceState& s);
void from_json(const json& j, TaskSpaceState& s);

void to_json(json& j, const Workspace& w);
void from_json(const json& j, Workspace& w);

void to_json(json& j, const Skill& s);
void from_json(const json& j, Skill& s);

void to_json(json& j, const QueryBatch& b);
void from_json(const json& j, QueryBatch& b);

/// {"dt", "diverged", "samples": [[t, x, y, vx, vy, ux, uy], ...]}
void to_json(json& j, const Trajectory& t);
void from_json(const json& j, Trajectory& t);

void to_json(json& j, const GuidanceFrame& g);
void from_json(const json& j, GuidanceFrame& g);

void to_json(json& j, const SessionConfig& c);
void from_json(const json& j, SessionConfig& c);

void to_json(json& j, const EpisodeRecord& r);
void from_json(const json& j, EpisodeRecord& r);

}  // namespace teachbot
