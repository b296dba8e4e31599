#include "tailcast/distcore.hpp"

#include <algorithm>
#include <vector>

namespace tailcast {

TailSummary TailSummary::from(std::span<const double> xs, double truncation) {
  if (xs.empty()) throw EmptyListError("tail summary of an empty sample");
  // Sorted accumulation makes the summary independent of input order.
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());

  TailSummary s;
  s.n = sorted.size();
  double sum = 0.0;
  for (double x : sorted) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  for (double x : sorted) s.scatter += (x - s.mean) * (x - s.mean);
  s.worst = sorted.back();
  s.truncation = truncation;
  return s;
}

TailSummary TailSummary::from(const PerformanceList& list) {
  std::vector<double> xs;
  xs.reserve(list.marks.size());
  for (const auto& m : list.marks) xs.push_back(m.x);
  return from(xs, list.c_k);
}

}  // namespace tailcast
