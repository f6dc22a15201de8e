#pragma once

namespace acmptc {

/// Static description of one AR/VR stream.
struct StreamSpec {
  int stream_id = 0;
  double expected_rate_mbps = 20.0;
  /// Weight of this stream's traffic deviation in the cwnd law.
  double weight_gamma = 0.1;
  /// Upper bound on the number of simultaneously assigned paths.
  int max_paths = 3;

  friend bool operator==(const StreamSpec&, const StreamSpec&) = default;
};

}  // namespace acmptc
