#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "slio/agent.hpp"
#include "slio/bus.hpp"
#include "slio/sensor_sim.hpp"
#include "slio/trajectory.hpp"
#include "slio/world.hpp"

namespace slio {

struct DroneConfig {
    int id = 0;
    double clock_offset = 0.0;
    std::optional<bool> mutual_obs;  // overrides the scenario mode
    SensorModel sensor;
    std::shared_ptr<const Trajectory> trajectory;
    double init_bias_gyro_sigma = 0.002;  // true-bias draw, rad/s
    double init_bias_acc_sigma = 0.03;    // true-bias draw, m/s^2
};

/// Fully parsed scenario: the simulated world, per-drone sensor models and
/// ground-truth trajectories, channel model and estimator parameters.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    double duration = 30.0;
    std::string mode = "swarm";  // or "solo"
    bool capture_messages = false;
    ChannelModel channel;
    WorldModel world;
    std::vector<DroneConfig> drones;
    AgentParams agent_defaults;  // drone id and teammates filled per drone
};

/// Parse a scenario from its JSON text. Unknown keys anywhere are a hard
/// error naming the offending key path.
ScenarioConfig parse_scenario(const nlohmann::json& root);

ScenarioConfig load_scenario(const std::string& path);

/// Ground-truth trajectory handles in drone order.
std::vector<TrueTrajectory> true_trajectories(const ScenarioConfig& config);

bool drone_mutual_obs(const ScenarioConfig& config, const DroneConfig& drone);

}  // namespace slio
