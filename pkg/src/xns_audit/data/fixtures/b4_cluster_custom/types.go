package controllers

import (
	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
)

// BackupSpec defines the desired state of Backup.
type BackupSpec struct {
	StoreName string `json:"storeName"`
	Bucket    string `json:"bucket"`
}

// Backup is the Schema for the backups API.
// +genclient
// +kubebuilder:object:root=true
type Backup struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec BackupSpec `json:"spec,omitempty"`
}

// BackupStoreSpec defines a shared object-storage location.
type BackupStoreSpec struct {
	Bucket string `json:"bucket"`
}

// BackupStore is a cluster-wide storage location shared by all tenants.
// +genclient
// +genclient:nonNamespaced
// +kubebuilder:object:root=true
type BackupStore struct {
	metav1.TypeMeta   `json:",inline"`
	metav1.ObjectMeta `json:"metadata,omitempty"`

	Spec BackupStoreSpec `json:"spec,omitempty"`
}
