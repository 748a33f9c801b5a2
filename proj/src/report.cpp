#include "fopsim/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

namespace fopsim {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::vector<double> moving_average(const std::vector<double>& rewards, int window) {
    std::vector<double> out(rewards.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        acc += rewards[i];
        if (i >= static_cast<std::size_t>(window)) acc -= rewards[i - window];
        out[i] = acc / std::min<std::size_t>(i + 1, window);
    }
    return out;
}

std::string report_summary_json(const RunReport& report) {
    json j;
    j["algorithm"] = to_string(report.config.algorithm);
    j["config"] = json::parse(config_to_json(report.config));
    j["objective"] = report.objective.objective;
    j["fop"] = report.objective.fop;
    j["mean_b_ul"] = report.objective.mean_ul;
    j["mean_b_dl"] = report.objective.mean_dl;
    j["ul_plateau"] = report.ul_plateau;
    j["dl_plateau"] = report.dl_plateau;
    j["audit_violations"] = report.audit_violations;
    j["nrmse_normalized"] = report.nrmse_normalized;
    std::vector<double> nrmse(report.nrmse_per_user.data(),
                              report.nrmse_per_user.data() + report.nrmse_per_user.size());
    j["nrmse_per_user"] = nrmse;
    j["slots"] = report.slots.size();
    j["ul_epochs"] = report.ul_epochs.size();
    j["dl_epochs"] = report.dl_epochs.size();
    return j.dump(2);
}

void write_report(const std::string& dir, const RunReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::create_directories(dir + "/models");

    std::ofstream summary(dir + "/report.json");
    if (!summary) throw std::runtime_error("cannot write " + dir + "/report.json");
    summary << report_summary_json(report) << "\n";

    std::ofstream slots(dir + "/slots.csv");
    if (!slots) throw std::runtime_error("cannot write " + dir + "/slots.csv");
    slots << "slot,b_ul,b_dl,ul_reward,dl_reward,decoded,served,cancelled,decided\n";
    for (const auto& s : report.slots)
        slots << s.slot << ',' << fmt(s.b_ul) << ',' << fmt(s.b_dl) << ','
              << fmt(s.ul_reward) << ',' << fmt(s.dl_reward) << ',' << s.decoded << ','
              << s.served << ',' << (s.cancelled ? 1 : 0) << ',' << (s.decided ? 1 : 0)
              << '\n';

    std::ofstream epochs(dir + "/epochs.csv");
    if (!epochs) throw std::runtime_error("cannot write " + dir + "/epochs.csv");
    epochs << "link,epoch,reward,moving_avg,loss,cancelled,trained\n";
    auto dump_epochs = [&](const char* link, const std::vector<EpochRecord>& recs) {
        for (const auto& r : recs)
            epochs << link << ',' << r.epoch << ',' << fmt(r.reward) << ','
                   << fmt(r.moving_avg) << ','
                   << (std::isnan(r.loss) ? std::string() : fmt(r.loss)) << ','
                   << (r.cancelled ? 1 : 0) << ',' << (r.trained ? 1 : 0) << '\n';
    };
    dump_epochs("ul", report.ul_epochs);
    dump_epochs("dl", report.dl_epochs);

    if (report.ul_net) {
        std::ofstream f(dir + "/models/uplink_policy.json");
        f << policy_to_json(*report.ul_net, report.final_epsilon) << "\n";
    }
    if (report.dl_net) {
        std::ofstream f(dir + "/models/downlink_policy.json");
        f << policy_to_json(*report.dl_net, report.final_epsilon) << "\n";
    }
}

}  // namespace fopsim
