use chrono::{Datelike, NaiveDate};

use crate::error::{Error, Result};

/// Activity features in fixture column order (after `dates`).
pub const ACTIVITY_FEATURES: [&str; 14] = [
    "monthly_commits",
    "monthly_commit_comments",
    "monthly_contributors",
    "monthly_open_PRs",
    "monthly_closed_PRs",
    "monthly_merged_PRs",
    "monthly_PR_mergers",
    "monthly_PR_comments",
    "monthly_open_issues",
    "monthly_closed_issues",
    "monthly_issue_comments",
    "monthly_stargazer",
    "monthly_forks",
    "monthly_watchers",
];

/// One calendar month of repository activity, all counts of events that
/// happened inside the month.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonthlyActivity {
    pub month_end: NaiveDate,
    pub commits: u64,
    pub commit_comments: u64,
    /// Distinct commit authors.
    pub contributors: u64,
    pub open_prs: u64,
    pub closed_prs: u64,
    pub merged_prs: u64,
    /// Distinct users who merged a pull request.
    pub pr_mergers: u64,
    pub pr_comments: u64,
    pub open_issues: u64,
    pub closed_issues: u64,
    pub issue_comments: u64,
    pub stargazers: u64,
    pub forks: u64,
    pub watchers: u64,
}

impl MonthlyActivity {
    pub fn empty(month_end: NaiveDate) -> Self {
        MonthlyActivity {
            month_end,
            commits: 0,
            commit_comments: 0,
            contributors: 0,
            open_prs: 0,
            closed_prs: 0,
            merged_prs: 0,
            pr_mergers: 0,
            pr_comments: 0,
            open_issues: 0,
            closed_issues: 0,
            issue_comments: 0,
            stargazers: 0,
            forks: 0,
            watchers: 0,
        }
    }

    pub fn counts(&self) -> [u64; 14] {
        [
            self.commits,
            self.commit_comments,
            self.contributors,
            self.open_prs,
            self.closed_prs,
            self.merged_prs,
            self.pr_mergers,
            self.pr_comments,
            self.open_issues,
            self.closed_issues,
            self.issue_comments,
            self.stargazers,
            self.forks,
            self.watchers,
        ]
    }

    pub fn values(&self) -> [f64; 14] {
        self.counts().map(|c| c as f64)
    }

    pub fn from_counts(month_end: NaiveDate, c: [u64; 14]) -> Result<Self> {
        let m = MonthlyActivity {
            month_end,
            commits: c[0],
            commit_comments: c[1],
            contributors: c[2],
            open_prs: c[3],
            closed_prs: c[4],
            merged_prs: c[5],
            pr_mergers: c[6],
            pr_comments: c[7],
            open_issues: c[8],
            closed_issues: c[9],
            issue_comments: c[10],
            stargazers: c[11],
            forks: c[12],
            watchers: c[13],
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.month_end != month_end_of(self.month_end) {
            return Err(Error::Fixture(format!(
                "{} is not the last day of its month",
                self.month_end
            )));
        }
        if self.merged_prs > self.closed_prs {
            return Err(Error::Fixture(format!(
                "{}: {} merged PRs but only {} closed",
                self.month_end, self.merged_prs, self.closed_prs
            )));
        }
        Ok(())
    }
}

pub fn month_end_of(date: NaiveDate) -> NaiveDate {
    let (y, m) = if date.month() == 12 {
        (date.year() + 1, 1)
    } else {
        (date.year(), date.month() + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1)
        .and_then(|d| d.pred_opt())
        .expect("valid calendar date")
}

pub fn next_month_end(month_end: NaiveDate) -> NaiveDate {
    month_end_of(month_end.succ_opt().expect("date in range"))
}
