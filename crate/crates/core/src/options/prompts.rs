//! Prompt templates: one shared body with a per-task environment paragraph.

use serde::{Deserialize, Serialize};

use crate::tasks::TaskId;

pub const PLACEHOLDER: &str = "{{TASK_DESCRIPTION}}";

pub const TEMPLATE: &str = include_str!("../../fixtures/prompts/template.txt");

/// How much the environment paragraph says about the reward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detail {
    #[default]
    More,
    Less,
}

impl std::str::FromStr for Detail {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "more" => Ok(Detail::More),
            "less" => Ok(Detail::Less),
            other => Err(format!("unknown prompt detail {other:?}")),
        }
    }
}

pub fn description(task: TaskId, detail: Detail) -> &'static str {
    match detail {
        Detail::More => match task {
            TaskId::StairClimber => include_str!("../../fixtures/prompts/more/StairClimber.txt"),
            TaskId::FourCorners => include_str!("../../fixtures/prompts/more/FourCorners.txt"),
            TaskId::TopOff => include_str!("../../fixtures/prompts/more/TopOff.txt"),
            TaskId::Maze => include_str!("../../fixtures/prompts/more/Maze.txt"),
            TaskId::CleanHouse => include_str!("../../fixtures/prompts/more/CleanHouse.txt"),
            TaskId::Harvester => include_str!("../../fixtures/prompts/more/Harvester.txt"),
            TaskId::DoorKey => include_str!("../../fixtures/prompts/more/DoorKey.txt"),
            TaskId::OneStroke => include_str!("../../fixtures/prompts/more/OneStroke.txt"),
            TaskId::Seeder => include_str!("../../fixtures/prompts/more/Seeder.txt"),
            TaskId::Snake => include_str!("../../fixtures/prompts/more/Snake.txt"),
        },
        Detail::Less => match task {
            TaskId::StairClimber => include_str!("../../fixtures/prompts/less/StairClimber.txt"),
            TaskId::FourCorners => include_str!("../../fixtures/prompts/less/FourCorners.txt"),
            TaskId::TopOff => include_str!("../../fixtures/prompts/less/TopOff.txt"),
            TaskId::Maze => include_str!("../../fixtures/prompts/less/Maze.txt"),
            TaskId::CleanHouse => include_str!("../../fixtures/prompts/less/CleanHouse.txt"),
            TaskId::Harvester => include_str!("../../fixtures/prompts/less/Harvester.txt"),
            TaskId::DoorKey => include_str!("../../fixtures/prompts/less/DoorKey.txt"),
            TaskId::OneStroke => include_str!("../../fixtures/prompts/less/OneStroke.txt"),
            TaskId::Seeder => include_str!("../../fixtures/prompts/less/Seeder.txt"),
            TaskId::Snake => include_str!("../../fixtures/prompts/less/Snake.txt"),
        },
    }
}

pub fn render(template: &str, description: &str) -> String {
    template.replace(PLACEHOLDER, description.trim_end())
}

pub fn prompt(task: TaskId, detail: Detail) -> String {
    render(TEMPLATE, description(task, detail))
}
