#pragma once

// Canonical scene-analysis prompt template, embedded verbatim from
// assets/scene_prompt.txt. Regenerate with scripts/embed_prompt.sh after
// editing the asset; prompt_test enforces byte equality and the pinned digest.

namespace scenebench::detail {

inline constexpr char kScenePromptText[] = R"SB_PROMPT(Please analyse the following image taken from an ego vehicle's perspective. For this image, answer each multi-choice question based on detected features, using '0' if a feature is not detected.

Multi-Choice Questions with Definitions:

1. Ambient: Refers to the time of day or lighting conditions in the image.
 - Values: Day (1), Dawn/Dusk (2), Night (3).
2. Attributes: Type of road attribute observed in the image.
 - Values: Straight road (1), Roundabout (2), Hilly road (3).
3. Construction Zone: Areas designated for roadwork, where special signs and barriers might be present.
 - Stages: Approaching (1), Entering (2), Passing (3).
4. Crosswalk: A designated pedestrian crossing area on the road, often marked with specific patterns, requiring vehicles to yield to pedestrians.
 - Stages: Approaching (1), Entering (2), Passing (3).
5. Driveway: An entry or exit path to private property, such as a house or building, connecting to the main road.
 - Stages: Approaching (1), Entering (2), Passing (3).
6. Intersection (3-way): A point where three roads converge, requiring vehicles to manage merging, yielding, or stopping.
 - Stages: Approaching (1), Entering (2), Passing (3).
7. Intersection (4-way): A point where four roads converge, requiring vehicles to manage merging, yielding, or stopping.
 - Stages: Approaching (1), Entering (2), Passing (3).
8. Intersection (5-way or more): A point where five or more roads converge, requiring complex navigation or yielding.
 - Stages: Approaching (1), Entering (2), Passing (3).
9. Overhead Bridge/Underpass: Structures that allow one road to pass over or under another.
 - Stages: Approaching (1), Entering (2), Passing (3).
10. Tunnel: A covered section of road, often through a hill or mountain.
 - Stages: Approaching (1), Entering (2), Passing (3).
11. Rail Crossing: A point where a railway track intersects with the road.
 - Stages: Approaching (1), Entering (2), Passing (3).
12. Surface: Condition of the road, which can impact driving safety.
 - Values: Dry (1), Wet (2), Icy (3), Snow (4).
13. Types: Classification of the road type based on surroundings and purpose.
 - Values: Local (1), Highway (2), Ramp (3), Urban (4), Rural (5).
14. Weather: Observed weather conditions affecting visibility and road conditions.
 - Values: Sunny (1), Cloudy (2), Rain (3), Snow (4), Fog (5), Hail (6).
15. No-Signal Intersection: An intersection without traffic lights, where vehicles yield based on rules.
 - Stages: Approaching (1), Passing (2).
16. Stop Intersection: An intersection with stop signs, requiring a full stop by vehicles.
 - Stages: Approaching (1), Passing (2).
17. Merge/Gore on Left: A triangular section at the convergence or divergence of roadways on the left, where lanes merge or split.
 - Stages: Approaching (1), Passing (2).
18. Merge/Gore on Right: A triangular section at the convergence or divergence of roadways on the right, where lanes merge or split.
 - Stages: Approaching (1), Passing (2).
19. Branch/Gore on Left: A split in the road where traffic divides to the left, often marked with signage or painted lines.
 - Stages: Approaching (1), Passing (2).
20. Branch/Gore on Right: A split in the road where traffic divides to the right, often marked with signage or painted lines.
 - Stages: Approaching (1), Passing (2).
21. Zebra Crossing: A type of pedestrian crossing marked by white stripes, where vehicles must yield to pedestrians.
 - Stages: Approaching (1), Passing (2).

Instructions: For this image, provide the analysis in JSON format as shown below, assigning each category a value of '0' if the feature is not detected:

```
{
  "Ambient": 0,
  "Attributes": 0,
  "Construction_zone": 0,
  "Cross_walk": 0,
  "Driveway": 0,
  "Intersection (3 way)": 0,
  "Intersection (4 way)": 0,
  "Intersection (5 way & more)": 0,
  "Overhead_bridge/under_overpass": 0,
  "Tunnel": 0,
  "Rail_crossing": 0,
  "Surface": 0,
  "Types": 0,
  "Weather": 0,
  "NoSignalIntersection": 0,
  "StopIntersection": 0,
  "Merge_GoreOnLeft": 0,
  "Merge_GoreOnRight": 0,
  "Branch_GoreOnLeft": 0,
  "Branch_GoreOnRight": 0,
  "ZebraCrossing": 0
}
```
)SB_PROMPT";

}  // namespace scenebench::detail
