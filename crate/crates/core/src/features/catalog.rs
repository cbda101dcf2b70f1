use serde::{Deserialize, Serialize};

/// Bumped whenever a feature is added, removed, reordered or redefined.
pub const CATALOG_VERSION: &str = "features-v1-48";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    LogStatistics,
    TraceLength,
    Activity,
    Variant,
    Dfg,
    Footprint,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSource::LogStatistics => "log-statistics",
            FeatureSource::TraceLength => "trace-length",
            FeatureSource::Activity => "activity",
            FeatureSource::Variant => "variant",
            FeatureSource::Dfg => "dfg",
            FeatureSource::Footprint => "footprint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub index: usize,
    pub name: String,
    pub description: String,
    pub source: FeatureSource,
}

use FeatureSource::*;

pub(crate) const SCHEMA: [(&str, FeatureSource, &str); 48] = [
    ("n_events", LogStatistics, "Total number of events in the log."),
    ("n_cases", LogStatistics, "Number of traces (cases)."),
    ("n_activities", LogStatistics, "Number of distinct activity labels."),
    ("n_variants", Variant, "Number of distinct activity sequences (trace variants)."),
    ("events_per_case_mean", LogStatistics, "Average number of events per case."),
    ("variants_per_case", LogStatistics, "Number of variants divided by number of cases."),
    ("distinct_activities_per_case_mean", LogStatistics, "Average number of distinct activities within a case."),
    ("trace_len_min", TraceLength, "Shortest trace length."),
    ("trace_len_max", TraceLength, "Longest trace length."),
    ("trace_len_mean", TraceLength, "Mean trace length."),
    ("trace_len_median", TraceLength, "Median trace length."),
    ("trace_len_std", TraceLength, "Population standard deviation of trace lengths."),
    ("trace_len_p25", TraceLength, "25th percentile of trace lengths (linear interpolation)."),
    ("trace_len_p75", TraceLength, "75th percentile of trace lengths (linear interpolation)."),
    ("trace_len_iqr", TraceLength, "Interquartile range of trace lengths."),
    ("trace_len_cv", TraceLength, "Coefficient of variation of trace lengths (std / mean)."),
    ("trace_len_skewness", TraceLength, "Population skewness of trace lengths; 0 when all traces have equal length."),
    ("act_freq_min", Activity, "Occurrences of the rarest activity."),
    ("act_freq_max", Activity, "Occurrences of the most frequent activity."),
    ("act_freq_mean", Activity, "Mean number of occurrences per activity."),
    ("act_freq_median", Activity, "Median number of occurrences per activity."),
    ("act_freq_std", Activity, "Population standard deviation of activity occurrences."),
    ("n_start_activities", Activity, "Number of distinct activities that start a trace."),
    ("n_end_activities", Activity, "Number of distinct activities that end a trace."),
    ("activity_entropy", Activity, "Shannon entropy (bits) of the activity distribution over events."),
    ("ratio_activities_in_all_traces", Activity, "Fraction of activities occurring in every trace."),
    ("ratio_most_common_variant", Variant, "Fraction of traces following the most frequent variant."),
    ("ratio_top_10pct_variants", Variant, "Fraction of traces covered by the most frequent 10% of variants (rounded up)."),
    ("variant_entropy", Variant, "Shannon entropy (bits) of the variant distribution over traces."),
    ("ratio_unique_variants", Variant, "Fraction of variants that occur exactly once."),
    ("variant_length_mean", Variant, "Mean length of the distinct variants."),
    ("variant_length_std", Variant, "Population standard deviation of distinct variant lengths."),
    ("ratio_traces_with_repetition", Variant, "Fraction of traces in which some activity occurs more than once."),
    ("dfg_n_edges", Dfg, "Number of directly-follows edges."),
    ("dfg_density", Dfg, "Directly-follows edges divided by the squared number of activities."),
    ("dfg_max_out_degree", Dfg, "Largest number of distinct successors of an activity."),
    ("dfg_mean_out_degree", Dfg, "Mean number of distinct successors per activity."),
    ("dfg_n_self_loops", Dfg, "Number of activities directly following themselves."),
    ("dfg_n_nodes_in_cycles", Dfg, "Number of activities lying on a directly-follows cycle (self-loops included)."),
    ("dfg_ratio_reciprocal_edges", Dfg, "Fraction of non-loop edges whose reverse edge also exists."),
    ("dfg_max_edge_ratio", Dfg, "Count of the most frequent edge divided by the number of events."),
    ("dfg_n_start", Dfg, "Number of start nodes of the directly-follows graph."),
    ("dfg_n_end", Dfg, "Number of end nodes of the directly-follows graph."),
    ("fp_ratio_sequence", Footprint, "Fraction of distinct activity pairs in a causal (→/←) footprint relation."),
    ("fp_ratio_parallel", Footprint, "Fraction of distinct activity pairs in the parallel (‖) footprint relation."),
    ("fp_ratio_choice", Footprint, "Fraction of distinct activity pairs in the choice (#) footprint relation."),
    ("fp_ratio_self_parallel", Footprint, "Fraction of activities parallel to themselves (length-one loops)."),
    ("fp_n_sequence_chains", Footprint, "Number of causal chains a → b → c of length three in the footprint."),
];

/// The full ordered feature catalog.
pub fn feature_catalog() -> Vec<FeatureDescriptor> {
    SCHEMA
        .iter()
        .enumerate()
        .map(|(index, (name, source, description))| FeatureDescriptor {
            index,
            name: (*name).to_owned(),
            description: (*description).to_owned(),
            source: *source,
        })
        .collect()
}

pub fn feature_names() -> Vec<&'static str> {
    SCHEMA.iter().map(|(n, _, _)| *n).collect()
}

pub fn lookup(name: &str) -> Option<FeatureDescriptor> {
    feature_catalog().into_iter().find(|d| d.name == name)
}
