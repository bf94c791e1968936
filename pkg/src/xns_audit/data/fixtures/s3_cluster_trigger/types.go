package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// ClusterConfigSpec defines the desired state of ClusterConfig.
type ClusterConfigSpec struct {
	TargetNamespace string `json:"targetNamespace"`
	SecretName      string `json:"secretName"`
}

// ClusterConfig is only creatable by cluster administrators.
// +kubebuilder:object:root=true
// +kubebuilder:resource:scope=Cluster
type ClusterConfig struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec ClusterConfigSpec `json:"spec,omitempty"`
}
