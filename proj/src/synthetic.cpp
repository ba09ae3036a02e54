#include "axmc/synthetic.hpp"

#include "axmc/gbt.hpp"
#include "axmc/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace axmc::synthetic {

Task income_like(std::size_t n, std::uint64_t seed, double label_bias) {
    static constexpr std::array workclass{"Private", "Self-emp", "Gov", "Other"};
    static constexpr std::array workclass_effect{0.0, 0.3, 0.1, -0.6};
    static constexpr std::array occupation{"Craft", "Sales", "Admin", "Exec", "Service", "Tech"};
    static constexpr std::array occupation_effect{-0.1, 0.1, -0.3, 0.9, -0.8, 0.5};
    static constexpr std::array marital{"Married", "Single", "Divorced"};
    static constexpr std::array marital_effect{0.8, -0.7, -0.3};
    static constexpr std::array region{"North", "South", "East", "West"};

    Rng rng(seed);
    std::ostringstream out;
    out.precision(6);
    out << "age,education_num,hours_per_week,capital_gain,capital_loss,tenure_years,workclass,occupation,"
           "marital_status,region,sex,income\n";
    for (std::size_t i = 0; i < n; ++i) {
        const bool male = rng.uniform() < 0.6;
        const double age = std::clamp(38.0 + 12.0 * rng.normal(), 17.0, 90.0);
        const double edu = std::round(std::clamp(10.0 + 2.5 * rng.normal(), 1.0, 16.0));
        const double hours = std::round(std::clamp(40.0 + (male ? 3.0 : -3.0) + 10.0 * rng.normal(), 1.0, 99.0));
        const double gain = rng.uniform() < 0.08 ? std::round(std::exp(7.0 + 1.5 * rng.uniform())) : 0.0;
        const double loss = rng.uniform() < 0.05 ? std::round(1500.0 + 500.0 * rng.normal()) : 0.0;
        const double tenure = std::max(0.0, std::round((age - 18.0) * rng.uniform()));
        const auto wc = rng.below(workclass.size());
        const auto oc = rng.below(occupation.size());
        const auto ms = rng.below(marital.size());
        const auto rg = rng.below(region.size());

        const double logit = -2.4 + 0.03 * (age - 38.0) + 0.35 * (edu - 10.0) + 0.03 * (hours - 40.0) +
                             (gain > 0.0 ? 1.6 : 0.0) + (loss > 0.0 ? 0.5 : 0.0) + 0.02 * tenure +
                             workclass_effect[wc] + occupation_effect[oc] + marital_effect[ms] +
                             (male ? label_bias : 0.0);
        const bool income = rng.uniform() < gbt::sigmoid(logit);

        out << age << ',' << edu << ',' << hours << ',' << gain << ',' << loss << ',' << tenure << ','
            << (rng.uniform() < 0.02 ? "?" : workclass[wc]) << ',' << occupation[oc] << ',' << marital[ms] << ','
            << region[rg] << ',' << (male ? "Male" : "Female") << ',' << (income ? 1 : 0) << '\n';
    }

    Task task;
    task.csv = out.str();
    for (const char* name : {"age", "education_num", "hours_per_week", "capital_gain", "capital_loss", "tenure_years"})
        task.schema.columns.push_back({name, ColumnKind::numeric});
    for (const char* name : {"workclass", "occupation", "marital_status", "region", "sex"})
        task.schema.columns.push_back({name, ColumnKind::categorical});
    task.schema.columns.push_back({"income", ColumnKind::categorical});
    task.schema.target = "income";
    task.schema.protected_attribute = "sex";
    task.schema.positive_label = "1";
    return task;
}

}  // namespace axmc::synthetic
