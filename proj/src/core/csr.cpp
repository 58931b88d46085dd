#include "provsense/core/csr.hpp"

#include <algorithm>
#include <tuple>

namespace provsense {

Csr csr_from_triplets(std::size_t rows, std::size_t columns,
                      std::vector<std::tuple<std::uint32_t, std::uint32_t, double>> trips) {
    std::sort(trips.begin(), trips.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    Csr m(rows, columns);
    m.offsets.assign(rows + 1, 0);
    for (std::size_t i = 0; i < trips.size();) {
        auto [r, c, v] = trips[i];
        double acc = v;
        std::size_t j = i + 1;
        while (j < trips.size() && std::get<0>(trips[j]) == r &&
               std::get<1>(trips[j]) == c) {
            acc += std::get<2>(trips[j]);
            ++j;
        }
        m.cols.push_back(c);
        m.vals.push_back(acc);
        ++m.offsets[r + 1];
        i = j;
    }
    for (std::size_t r = 0; r < rows; ++r) m.offsets[r + 1] += m.offsets[r];
    return m;
}

}  // namespace provsense
