mod build;
mod ingest;
mod report;
mod simulate;
mod sweep;
mod synth;

pub use build::build;
pub use ingest::ingest;
pub use report::report;
pub use simulate::simulate;
pub use sweep::sweep;
pub use synth::synth;

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}
