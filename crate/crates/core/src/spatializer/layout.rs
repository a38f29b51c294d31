use crate::scene::LayoutId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    /// Speaker azimuth in degrees, positive to the listener's right.
    Directional(f64),
    Lfe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeakerChannel {
    pub name: &'static str,
    pub kind: ChannelKind,
}

/// Output channels in file order.
#[derive(Debug, PartialEq)]
pub struct SpeakerLayout {
    pub id: LayoutId,
    pub channels: &'static [SpeakerChannel],
}

const fn dir(name: &'static str, azimuth: f64) -> SpeakerChannel {
    SpeakerChannel {
        name,
        kind: ChannelKind::Directional(azimuth),
    }
}

static MONO: SpeakerLayout = SpeakerLayout {
    id: LayoutId::Mono,
    channels: &[dir("M", 0.0)],
};

static STEREO: SpeakerLayout = SpeakerLayout {
    id: LayoutId::Stereo,
    channels: &[dir("L", -90.0), dir("R", 90.0)],
};

static QUAD: SpeakerLayout = SpeakerLayout {
    id: LayoutId::Quad,
    channels: &[dir("FL", -45.0), dir("FR", 45.0), dir("RL", -135.0), dir("RR", 135.0)],
};

static FIVE_ONE: SpeakerLayout = SpeakerLayout {
    id: LayoutId::FiveOne,
    channels: &[
        dir("FL", -30.0),
        dir("FR", 30.0),
        dir("C", 0.0),
        SpeakerChannel {
            name: "LFE",
            kind: ChannelKind::Lfe,
        },
        dir("RL", -110.0),
        dir("RR", 110.0),
    ],
};

impl SpeakerLayout {
    pub fn get(id: LayoutId) -> &'static SpeakerLayout {
        match id {
            LayoutId::Mono => &MONO,
            LayoutId::Stereo => &STEREO,
            LayoutId::Quad => &QUAD,
            LayoutId::FiveOne => &FIVE_ONE,
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// `(channel index, azimuth)` for every non-LFE channel, in file order.
    pub fn directional(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.channels.iter().enumerate().filter_map(|(i, c)| match c.kind {
            ChannelKind::Directional(az) => Some((i, az)),
            ChannelKind::Lfe => None,
        })
    }

    pub fn directional_count(&self) -> usize {
        self.directional().count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_counts_and_order() {
        let counts: Vec<usize> = LayoutId::ALL.iter().map(|&l| SpeakerLayout::get(l).channel_count()).collect();
        assert_eq!(counts, vec![1, 2, 4, 6]);
        let names: Vec<&str> = FIVE_ONE.channels.iter().map(|c| c.name).collect();
        assert_eq!(names, ["FL", "FR", "C", "LFE", "RL", "RR"]);
        assert_eq!(FIVE_ONE.directional_count(), 5);
    }

    #[test]
    fn directional_azimuths_unique() {
        for l in LayoutId::ALL {
            let mut az: Vec<f64> = SpeakerLayout::get(l).directional().map(|(_, a)| a).collect();
            az.sort_by(f64::total_cmp);
            az.dedup();
            assert_eq!(az.len(), SpeakerLayout::get(l).directional_count());
        }
    }
}
