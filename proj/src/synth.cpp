#include "survaudit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "survaudit/rng.hpp"

namespace survaudit {

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.n_patients = j.value("n_patients", s.n_patients);
    s.p_clinical = j.value("p_clinical", s.p_clinical);
    s.p_expr = j.value("p_expr", s.p_expr);
    s.p_cna = j.value("p_cna", s.p_cna);
    if (j.contains("coefficients")) {
        for (const auto& c : j.at("coefficients")) {
            s.coefficients.emplace_back(c.at("index").get<std::size_t>(),
                                        c.at("value").get<double>());
        }
    }
    s.weibull_shape = j.value("weibull_shape", s.weibull_shape);
    s.weibull_scale = j.value("weibull_scale", s.weibull_scale);
    s.censor_rate = j.value("censor_rate", s.censor_rate);
    if (!j.contains("seed")) throw ConfigError("synthetic spec must set a seed");
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

}  // namespace

SyntheticCohort synth_cohort(const SyntheticSpec& spec) {
    if (spec.n_patients < 2) throw ConfigError("synthetic cohort needs n >= 2");
    if (spec.weibull_shape <= 0 || spec.weibull_scale <= 0) {
        throw ConfigError("Weibull parameters must be positive");
    }
    if (spec.censor_rate < 0 || spec.censor_rate >= 1) {
        throw ConfigError("censor_rate must lie in [0,1)");
    }
    const std::size_t p_total = spec.p_clinical + spec.p_expr + spec.p_cna;
    for (const auto& [idx, value] : spec.coefficients) {
        if (idx >= p_total) throw ConfigError("coefficient index out of range");
    }

    const std::size_t n = spec.n_patients;
    SyntheticCohort out;
    out.patient_ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.patient_ids.push_back(padded("P", i + 1, 5));

    SplitMix64 feature_rng(derive_seed(spec.seed, "features"));
    std::vector<std::vector<double>> x(n, std::vector<double>(p_total));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p_total; ++j) x[i][j] = feature_rng.next_gaussian();
    }

    out.true_eta.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [idx, value] : spec.coefficients) out.true_eta[i] += value * x[i][idx];
    }

    // T = scale * exp(-eta/shape) * (-ln U)^(1/shape)  =>  H0(t) = (t/scale)^shape.
    SplitMix64 time_rng(derive_seed(spec.seed, "event_times"));
    std::vector<double> event_times(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = time_rng.next_double();
        if (u <= 0.0) u = 0x1.0p-53;
        event_times[i] = spec.weibull_scale * std::exp(-out.true_eta[i] / spec.weibull_shape) *
                         std::pow(-std::log(u), 1.0 / spec.weibull_shape);
    }

    // Uniform censoring C = c_max * V, with c_max bisected so the observed
    // censoring fraction hits the target.
    SplitMix64 censor_rng(derive_seed(spec.seed, "censoring"));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = censor_rng.next_double();
    auto censored_fraction = [&](double c_max) {
        std::size_t censored = 0;
        for (std::size_t i = 0; i < n; ++i) {
            censored += static_cast<std::size_t>(c_max * v[i] < event_times[i]);
        }
        return static_cast<double>(censored) / static_cast<double>(n);
    };
    double c_max;
    if (spec.censor_rate == 0.0) {
        c_max = 2.0 * *std::max_element(event_times.begin(), event_times.end()) + 1.0;
    } else {
        double lo = 1e-9, hi = 1.0;
        while (censored_fraction(hi) > spec.censor_rate) hi *= 2.0;  // monotone decreasing
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (censored_fraction(mid) > spec.censor_rate) lo = mid;
            else hi = mid;
        }
        c_max = hi;
    }

    out.times.resize(n);
    out.events.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = c_max * v[i];
        if (event_times[i] <= c) {
            out.times[i] = event_times[i];
            out.events[i] = 1;
        } else {
            out.times[i] = c;
            out.events[i] = 0;
        }
    }

    // Subgroup columns (pure noise): age and ER status.
    SplitMix64 group_rng(derive_seed(spec.seed, "subgroups"));
    std::vector<double> age(n);
    std::vector<std::string> er(n);
    for (std::size_t i = 0; i < n; ++i) {
        age[i] = 60.0 + 12.0 * group_rng.next_gaussian();
        er[i] = group_rng.next_double() < 0.7 ? "ER+" : "ER-";
    }

    out.clinical.header = {"patient_id", "time_months", "event", "age", "er_status"};
    for (std::size_t j = 0; j < spec.p_clinical; ++j) {
        out.clinical.header.push_back(padded("clin_", j + 1, 2));
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{out.patient_ids[i], format_double(out.times[i]),
                                     std::to_string(out.events[i]), format_double(age[i]), er[i]};
        for (std::size_t j = 0; j < spec.p_clinical; ++j) row.push_back(format_double(x[i][j]));
        out.clinical.rows.push_back(std::move(row));
    }

    out.sample_map.header = {"sample_id", "patient_id"};
    std::vector<std::string> sample_ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        sample_ids[i] = "S-" + out.patient_ids[i];
        out.sample_map.rows.push_back({sample_ids[i], out.patient_ids[i]});
    }

    out.expr.header = {"sample_id", "gene", "value"};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < spec.p_expr; ++j) {
            out.expr.rows.push_back({sample_ids[i], padded("ge", j + 1, 4),
                                     format_double(x[i][spec.p_clinical + j])});
        }
    }
    out.cna.header = {"sample_id", "gene", "value"};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < spec.p_cna; ++j) {
            out.cna.rows.push_back({sample_ids[i], padded("cn", j + 1, 4),
                                    format_double(x[i][spec.p_clinical + spec.p_expr + j])});
        }
    }
    return out;
}

void write_synthetic(const SyntheticCohort& cohort, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const auto path = [&](const char* name) {
        return (std::filesystem::path(dir) / name).string();
    };
    write_file(path("clinical.csv"), to_csv(cohort.clinical));
    write_file(path("expr.csv"), to_csv(cohort.expr));
    write_file(path("cna.csv"), to_csv(cohort.cna));
    write_file(path("sample_map.csv"), to_csv(cohort.sample_map));
}

}  // namespace survaudit
