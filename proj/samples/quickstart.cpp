// Cluster a synthetic network, replace one sensor from its cluster mates
// and compare a robot collection schedule against fixed sensors.

#include <iostream>

#include <soilnet/soilnet.hpp>

using namespace soilnet;

int main() {
    SyntheticSpec spec;
    spec.groups = 3;
    spec.sensors_per_group = 6;
    spec.length = 24 * 14;
    spec.noise_sigma = 0.05;
    spec.max_shift_slots = 4;
    const auto corpus = generate_synthetic(spec, 2024);
    const auto& net = corpus.network;

    ClusteringConfig cfg;
    cfg.method = Method::kshape;
    cfg.seed = 1;
    const auto sweep = sweep_k(net, cfg, 2, 6);
    for (const auto& e : sweep.entries)
        std::cout << "k=" << e.k << " silhouette=" << e.mean_silhouette << (e.feasible ? "" : " (infeasible)") << "\n";
    const auto& result = sweep.selected;
    std::cout << "selected k=" << sweep.selected_k
              << ", ARI vs truth=" << adjusted_rand_index(result.labels, corpus.labels) << "\n";

    // Pretend the first sensor was removed and rebuild it from its cluster.
    const std::string target = net[0].sensor().id;
    const auto plan = plan_imputation(result, net, target);
    const auto rebuilt = impute(plan, net);
    std::cout << target << " rebuilt from " << plan.donors.size()
              << " donors, MAE=" << mean_of(mae(net[0], rebuilt)) << "\n";

    // One robot visiting the first six sensors every two hours.
    std::vector<SensorId> route;
    for (std::size_t i = 0; i < 6; ++i) route.push_back(net[i].sensor());
    const auto schedule = build_schedule(route, PathKind::linear, 120);
    std::vector<double> fixed, robotic;
    for (const auto& s : simulate_collection(schedule, net, SlotRange::whole(net.grid()))) {
        const auto& truth = net.at(s.sensor.id);
        const auto rec = reconstruct(s, net.grid(), Reconstruction::hold);
        const SlotRange scored{1, truth.size()};
        for (double e : paired_errors(truth, persistence_forecast(truth), scored)) fixed.push_back(e);
        for (double e : paired_errors(truth, persistence_forecast(rec), scored)) robotic.push_back(e);
    }
    const auto row = compare(summarize(fixed), summarize(robotic), "Linear", "Robotic");
    std::cout << comparison_table({row});
}
