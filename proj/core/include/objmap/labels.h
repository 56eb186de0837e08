#ifndef OBJMAP_LABELS_H_
#define OBJMAP_LABELS_H_

#include <array>
#include <cstdint>

namespace objmap {

// Persistent geometric segment label (set L). 0 means unlabeled.
using Label = std::uint32_t;
// Persistent object instance label (set O). 0 means no instance.
using InstanceLabel = std::uint32_t;

// Session-wide label counters. Labels are handed out in increasing order and
// never reused.
struct PersistentLabels {
  Label next_segment_label = 1;
  InstanceLabel next_instance_label = 1;

  Label fresh_segment_label() { return next_segment_label++; }
  InstanceLabel fresh_instance_label() { return next_instance_label++; }

  friend bool operator==(const PersistentLabels&,
                         const PersistentLabels&) = default;
};

// Deterministic display color for a label; label 0 is light gray.
std::array<std::uint8_t, 3> label_color(std::uint32_t label);

}  // namespace objmap

#endif  // OBJMAP_LABELS_H_
