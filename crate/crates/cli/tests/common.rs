#![allow(dead_code)]

use std::path::Path;

use aft_cli::RunConfig;

/// A configuration small enough to generate and train in a second or two.
pub fn tiny_config(out: &Path) -> RunConfig {
    let text = format!(
        r#"
out = "{}"

[model]
d = 8
heads = 2
layers = 1
ff_hidden = 16
focal = [2, 4, 24]
max_positions = 24
text_hidden = 8
blind_hidden = 8

[train]
epochs = 2
batch_size = 4
seed = 5

[train.adam]
lr = 0.003

[data]
episodes_per_sport = 12
questions_per_episode = 6
min_answer_count = 3
seed = 11

[data.episode]
frames = 24
min_duration = 3
max_duration = 6
d_appearance = 4
d_motion = 4

[bench]
n = 64
focal = [2, 5]
heads = 2
d = 8
repetitions = 3
"#,
        out.display()
    );
    RunConfig::from_toml(&text).expect("tiny config parses")
}
