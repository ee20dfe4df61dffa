#include "perfsamp/service_sampler.hpp"

#include <cmath>
#include <sstream>

#include "perfsamp/error.hpp"

namespace perfsamp {

namespace {

constexpr long kRefinementCap = 10'000'000;

// P(x < V <= y) without cancellation in either tail.
double band_mass(const DistributionSpec& d, double x, double y) {
  if (d.cdf(x) > 0.5) return std::max(0.0, d.tail(x) - d.tail(y));
  return std::max(0.0, d.cdf(y) - d.cdf(x));
}

// Lower factor u_k(h) bounding prod_{i>h} (1 - p_k(i)) from below, or 0 while
// the bound 1 - p >= exp(-2p) is not yet known to hold for every i > h.
double lower_factor(const DistributionSpec& d, double slope, std::optional<long> gap, long h) {
  const double cap = gap ? d.cdf((h + 1 + *gap) * slope) : 1.0;
  if (!(cap > 0)) return 0.0;
  if (d.tail((h + 1) * slope) / cap > 0.5) return 0.0;
  const double sum_bound = d.integrated_tail(h * slope) / (slope * cap);
  return std::exp(-2.0 * sum_bound);
}

}  // namespace

std::vector<long> ServiceBlocks::block_starts() const {
  std::vector<long> starts;
  for (const auto& b : blocks) starts.push_back(b.start);
  if (!blocks.empty()) starts.push_back(next_start());
  return starts;
}

double record_exceedance_prob(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long n) {
  const double level = n * slope;
  if (!gap) return service.tail(level);
  const double top = (n + *gap) * slope;
  const double cap = service.cdf(top);
  if (!(cap > 0)) return 1.0;
  return std::min(1.0, band_mass(service, level, top) / cap);
}

RecordDraw sample_next_record(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long prev_offset, double u) {
  RecordDraw out;
  long h = prev_offset + 1;
  double g = 1.0 - record_exceedance_prob(service, slope, gap, h);
  double f = g * lower_factor(service, slope, gap, h);
  while (f < u && u < g) {
    if (++out.refinements > kRefinementCap) {
      throw Error(ErrorCode::IterationCap, "record sandwich did not separate the uniform");
    }
    ++h;
    g *= 1.0 - record_exceedance_prob(service, slope, gap, h);
    f = g * lower_factor(service, slope, gap, h);
    if (f > g) throw Error(ErrorCode::GuardViolation, "lower bound exceeded upper bound");
  }
  if (u > f) out.offset = h;
  return out;
}

RecordDraw sample_next_record(const DistributionSpec& service, double slope,
                              std::optional<long> gap, long prev_offset, RngStream& stream) {
  return sample_next_record(service, slope, gap, prev_offset, stream.next_uniform());
}

ServiceSampler::ServiceSampler(DistributionSpec service, double slope)
    : service_(std::move(service)) {
  if (!(slope > 0)) throw Error(ErrorCode::InvalidModel, "boundary slope must be positive");
  blocks_.boundary_slope = slope;
}

void ServiceSampler::extend(RngStream& stream) {
  const double c = blocks_.boundary_slope;
  ServiceBlock block;
  if (blocks_.blocks.empty()) {
    blocks_.values.push_back(sample(service_, stream));
    block.start = 1;
  } else {
    block.start = blocks_.next_start();
    block.previous_start = blocks_.blocks.back().start;
  }
  const auto gap = block.gap();
  long offset = 0;
  while (true) {
    const RecordDraw draw = sample_next_record(service_, c, gap, offset, stream);
    refinements_ += draw.refinements;
    if (!draw.offset) break;
    const long record = block.start + *draw.offset;
    for (long n = blocks_.simulated() + 1; n < record; ++n) {
      blocks_.values.push_back(sample_conditional(service_, 0.0, (n - block.start) * c, stream));
    }
    const double upper = block.previous_start ? (record - *block.previous_start) * c : INFINITY;
    blocks_.values.push_back(
        sample_conditional(service_, (record - block.start) * c, upper, stream));
    block.records.push_back(record);
    offset = *draw.offset;
  }
  block.gamma = static_cast<long>(block.records.size()) + 1;
  if (block.records.empty()) {
    // No record at all: the next block starts one customer later.
    const long n = block.start + 1;
    blocks_.values.push_back(sample_conditional(service_, 0.0, (n - block.start) * c, stream));
  }
  blocks_.blocks.push_back(std::move(block));
}

long ServiceSampler::block_start_at_least(long n, RngStream& stream) {
  if (blocks_.blocks.empty()) extend(stream);
  while (blocks_.next_start() < n) extend(stream);
  for (const auto& b : blocks_.blocks) {
    if (b.start >= n) return b.start;
  }
  return blocks_.next_start();
}

ServiceBlocks generate_service_blocks(const DistributionSpec& service, double slope, int count,
                                      RngStream& stream) {
  if (count < 1) throw Error(ErrorCode::InvalidModel, "need at least one block");
  ServiceSampler sampler(service, slope);
  for (int k = 0; k < count; ++k) sampler.extend(stream);
  return sampler.blocks();
}

std::vector<std::string> check_service_invariants(const ServiceBlocks& sb) {
  std::vector<std::string> bad;
  auto report = [&](const std::string& what, long k, long n) {
    std::ostringstream os;
    os << "block " << k + 1 << ", customer " << n << ": " << what;
    bad.push_back(os.str());
  };
  const double c = sb.boundary_slope;
  const long total = sb.simulated();
  for (std::size_t k = 0; k < sb.blocks.size(); ++k) {
    const ServiceBlock& b = sb.blocks[k];
    const long end = k + 1 < sb.blocks.size() ? sb.blocks[k + 1].start : sb.next_start();
    if (k == 0 && (b.start != 1 || b.previous_start)) report("first block must start at 1", 0, 1);
    if (k > 0 && b.previous_start != sb.blocks[k - 1].start) report("wrong previous start", k, b.start);
    if (end <= b.start) report("block starts not increasing", k, end);
    if (b.gamma != static_cast<long>(b.records.size()) + 1) report("gamma mismatch", k, b.start);
    if (b.records.empty() ? end != b.start + 1 : end != b.records.back()) {
      report("next start is not the last record", k, end);
    }
    std::size_t r = 0;
    for (long n = b.start + 1; n <= end && n <= total; ++n) {
      const double v = sb.value(n);
      const bool is_record = r < b.records.size() && b.records[r] == n;
      if (is_record) {
        ++r;
        if (!(v > (n - b.start) * c)) report("record below its boundary", k, n);
        if (b.previous_start && !(v <= (n - *b.previous_start) * c)) {
          report("record above its cap", k, n);
        }
      } else if (!(v <= (n - b.start) * c)) {
        report("non-record above the boundary", k, n);
      }
    }
    if (r != b.records.size()) report("record outside its block", k, b.start);
    for (long n = end + 1; n <= total; ++n) {
      if (!(sb.value(n) <= (n - b.start) * c)) report("later customer crosses the boundary", k, n);
    }
  }
  return bad;
}

}  // namespace perfsamp
