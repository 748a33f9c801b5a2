#pragma once

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

namespace fopsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// Access point: geometry, sectored antenna pattern and power budget.
struct ApConfig {
    Vec2 position{0.0, 0.0};       // x_j, y_j [m]
    double antenna_height = 5.5;   // H_j [m]
    double downtilt = M_PI / 3.0;  // theta_j [rad], in (0, pi/2)
    double mainlobe_gain = 0.0;    // G, linear ratio
    double sidelobe_gain = 0.0;    // g, linear ratio
    double beamwidth = M_PI / 3.0; // phi [rad], in (0, pi)
    int num_elements = 2;          // K antenna elements
    double max_power = 0.0;        // E~_j [W]
    double circuit_power = 0.0;    // E^c_j [W], < max_power
    int decode_capacity = 6;       // M~, uplink users decodable per slot

    void validate() const;
};

// Per-slot user state. `direction` is the displacement from the previous
// slot (the position itself at t = 1).
struct UserState {
    Vec2 position{0.0, 0.0};        // x_it, y_it [m]
    double height = 1.8;            // h_i [m]
    Vec2 direction{0.0, 0.0};       // x->_it
    double hmd_tx_power = 0.0;      // p_it [W]
    double hmd_circuit_power = 0.0; // p^c_i [W]
    double hmd_max_power = 0.0;     // p~_i [W]

    double power_budget() const { return hmd_max_power - hmd_circuit_power; }
    void validate() const;
};

// Radio constants shared by every link.
struct RadioParams {
    double carrier_freq = 28e9;     // f_c [Hz]
    double light_speed = 3.0e8;     // c [m/s]
    double noise_psd = 0.0;         // N_0 [W/Hz]
    double ul_bandwidth = 200e6;    // W^ul [Hz]
    double dl_bandwidth = 800e6;    // W^dl [Hz]
    double ul_snr_threshold = 200.0;// theta^th, linear
    double dl_rate_threshold = 1e9; // gamma^th [bit/s]
    double ul_fading_exponent = 5.0;   // alpha
    Eigen::MatrixXd rayleigh_gain;     // c_ij, one scalar per user-AP pair
    double pathloss_exp_los = 2.0;     // eta_LoS
    double pathloss_exp_nlos = 2.4;    // eta_NLoS
    double shadow_var_los = 5.3;       // sigma^2_LoS [dB^2]
    double shadow_var_nlos = 5.27;     // sigma^2_NLoS [dB^2]
    double blockage_angle = M_PI / 2;  // theta-like bound vartheta [rad]
    double interference_radius = 50.0; // D^th [m]
    Vec2 area_center{250.0, 250.0};    // x_o, y_o [m]

    void validate() const;
};

struct NetworkScene {
    std::vector<ApConfig> aps;
    std::vector<UserState> users;
    RadioParams radio;

    int num_aps() const { return static_cast<int>(aps.size()); }
    int num_users() const { return static_cast<int>(users.size()); }
    int num_elements() const { return aps.empty() ? 0 : aps.front().num_elements; }
};

// One slot's channel state. dl_channel[i] stacks the per-AP element vectors
// into a single JK complex vector with the antenna gain already folded in.
struct ChannelRealization {
    Eigen::MatrixXd ul_pathloss;             // N x J, linear d^-alpha
    std::vector<Eigen::VectorXcd> dl_channel;// per user, length J*K
    Eigen::MatrixXi blockage;                // N x J in {0,1}
    Eigen::MatrixXd antenna_gain;            // N x J in {G, g}
    std::vector<std::vector<int>> interferers; // M_it per user

    int num_users() const { return static_cast<int>(dl_channel.size()); }
};

// Stacked beamformers, one JK vector per user; the Gram matrix G_it is
// materialised only where the SDP route needs it.
struct BeamformerSet {
    std::vector<Eigen::VectorXcd> stacked; // g_it, length J*K (empty = unserved)
    std::vector<Eigen::MatrixXcd> gram;    // optional G_it, JK x JK

    bool has(int user) const {
        return user < static_cast<int>(stacked.size()) && stacked[user].size() > 0;
    }
};

// ---- Physical-layer operations ----------------------------------------

// Uplink path gain d^-alpha over the 3D user-AP distance.
double ul_pathloss(const UserState& user, const ApConfig& ap, const RadioParams& radio);

// Uplink SNR a * p * c_ij * h^ / (N0 * W^ul / N).
double ul_snr(bool assoc, double tx_power, double rayleigh_gain, double pathloss,
              const RadioParams& radio, int n_users);

inline bool ul_decodes(double snr, const RadioParams& radio) {
    return snr >= radio.ul_snr_threshold;
}

// Tilt angle between the AP boresight and the user, needed by antenna_gain.
double tilt_angle(const UserState& user, const ApConfig& ap, const RadioParams& radio);

// Sectored pattern: mainlobe gain iff the tilt angle is within phi/2 (closed).
double antenna_gain(const UserState& user, const ApConfig& ap, const RadioParams& radio);

// Angle between the user->AP vector and the user's facing direction.
double orientation_angle(const UserState& user, const ApConfig& ap);

// Self-blockage indicator: 1 iff the orientation angle exceeds vartheta.
bool blocked(const UserState& user, const ApConfig& ap, const RadioParams& radio);

// Per-element complex channel from one AP (length K), antenna gain folded in,
// shadowing and phases drawn from `rng`.
Eigen::VectorXcd dl_channel(const UserState& user, const ApConfig& ap,
                            const RadioParams& radio, bool is_blocked,
                            double gain, std::mt19937_64& rng);

// Interfering-user sets: m in M_it iff m != i and ||pos_m - pos_i|| < D^th.
std::vector<std::vector<int>> interferers(const std::vector<UserState>& users,
                                          const RadioParams& radio);

// CoMP downlink rate of user i under serve vector a and beams g (Eq. of the
// Shannon form; interference counts served users in M_it via their own
// received power).
double dl_rate(int user, const Eigen::VectorXi& dl_serve,
               const ChannelRealization& channel, const BeamformerSet& beams,
               const RadioParams& radio);

// Received CoMP signal power |h^H g|^2 of one user.
double received_power(const Eigen::VectorXcd& stacked_channel,
                      const Eigen::VectorXcd& stacked_beam);

// Draws the whole slot: blockage, gains, path losses, channels, interferers.
ChannelRealization make_channel(const NetworkScene& scene, std::mt19937_64& rng);

// ---- Constraint checks and the objective -------------------------------

// Transmit power AP j spends on the served users: sum_i a_i ||g_ij||^2.
double ap_transmit_power(const Eigen::VectorXi& dl_serve, const BeamformerSet& beams,
                         int ap_index, int num_elements);

bool ap_power_check(const Eigen::VectorXi& dl_serve, const BeamformerSet& beams,
                    const ApConfig& ap, int ap_index);

// p_it + p^c_i <= p~_i (closed inequality).
bool hmd_power_check(const UserState& user);

// Slot record consumed by the FoP/objective accumulator and the audits.
struct SlotDecision {
    int slot = 0;
    Eigen::MatrixXi ul_assoc;   // N x J, executed (decoded) associations
    Eigen::VectorXi dl_serve;   // N, executed satisfied indicator
    Eigen::VectorXi dl_intended;// N, serve set the beams were built for
    Eigen::VectorXd hmd_power;  // N [W]
    BeamformerSet beams;
    double ul_reward = 0.0;
    double dl_reward = 0.0;
    bool ul_cancelled = false;
};

struct FopSummary {
    double fop = 0.0;        // B-bar(T)
    double objective = 0.0;  // Eq. (14a) value over the window
    double mean_ul = 0.0;    // mean B_t^ul
    double mean_dl = 0.0;    // mean B_t^dl
};

// B_t^ul = (1/N) sum_ij a_ijt, B_t^dl = (1/N) sum_i a_it; the objective
// subtracts (1/T) sum_t sum_ij a_ijt p^tot_it / p~_i.
FopSummary fop_objective(const std::vector<SlotDecision>& window,
                         const std::vector<UserState>& users);

}  // namespace fopsim
