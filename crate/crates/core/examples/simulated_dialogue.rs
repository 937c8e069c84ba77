//! One expert dialogue against the agenda-based user, shown turn by turn
//! with the user's dialogue acts, under both template sets.

use std::sync::Arc;

use dialogue_workbench::corpus::ExpertAgent;
use dialogue_workbench::domain::{generate_kb, KbSize, SystemNlg};
use dialogue_workbench::episode::run_episode;
use dialogue_workbench::simulator::{judge_transcript, RewardScheme, TemplateSet, UserSimulator};

fn main() -> dialogue_workbench::Result<()> {
    let kb = Arc::new(generate_kb(1, KbSize::default())?);
    let nlg = SystemNlg::default_templates();
    let index = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0);
    for set in [TemplateSet::Train, TemplateSet::Extended] {
        let sim = UserSimulator::new(kb.clone(), 5).with_template_set(Some(set));
        let mut user = sim.user(index)?;
        println!("== {set} templates, goal {:?}", user.goal().values);
        let t = run_episode(&mut ExpertAgent::new(), &mut user, &kb, &nlg)?;
        for (k, e) in t.exchanges.iter().enumerate() {
            let acts: Vec<String> = e.user.acts.iter().map(|a| a.to_string()).collect();
            println!("{:>2} user:   {}  [{}]", k + 1, e.user.text, acts.join(" "));
            println!("   system: {}  [{}]", e.system.text, e.system.action.label());
        }
        if let Some(closing) = &t.closing {
            println!("   user:   {}", closing.text);
        }
        let o = judge_transcript(&t, RewardScheme::default())?;
        println!("success {}, {} turns, reward {}", o.success, o.turn_count, o.total_reward());
    }
    Ok(())
}
